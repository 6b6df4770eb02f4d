//! Parsing of user-supplied files and compound flag values.

use std::fs;
use std::path::Path;

use spinj_core::linalg::RMatrix;
use spinj_core::states::{binomial_weights, delta_weights, geometric_weights};
use spinj_core::{Error, ParamPoint, SpinSystem, WeightDistribution};

use crate::FamilyArg;

/// Deviation of the weight sum from 1 above which the file is renormalized
/// with a warning.
pub const WEIGHT_SUM_WARN: f64 = 1e-9;

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))
}

fn parse_f64(tok: &str, what: &str) -> Result<f64, Error> {
    tok.trim()
        .parse::<f64>()
        .map_err(|_| Error::Domain(format!("{what}: cannot parse {tok:?} as a number")))
}

/// One nonnegative value per line; blank lines and `#` comments are skipped.
/// Returns the normalized weights and a warning when renormalization changed them.
pub fn read_weights(path: &Path) -> Result<(Vec<f64>, Option<String>), Error> {
    let text = read(path)?;
    let raw: Vec<f64> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse_f64(l, "weights file"))
        .collect::<Result<_, _>>()?;
    if raw.is_empty() {
        return Err(Error::Domain("weights file is empty".into()));
    }
    if let Some(bad) = raw.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::Domain(format!("weights file: {bad} is not a nonnegative number")));
    }
    let sum: f64 = raw.iter().sum();
    if sum <= 0.0 {
        return Err(Error::Domain("weights file sums to zero".into()));
    }
    let warning = ((sum - 1.0).abs() > WEIGHT_SUM_WARN)
        .then(|| format!("weights sum to {sum}; renormalized to 1"));
    Ok((raw.iter().map(|w| w / sum).collect(), warning))
}

/// A 2×2 matrix: two lines, two numbers each, separated by whitespace or commas.
pub fn read_weight_matrix(path: &Path) -> Result<RMatrix, Error> {
    let text = read(path)?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| parse_f64(t, "weight matrix"))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
        return Err(Error::Domain("weight matrix file must hold a 2×2 matrix".into()));
    }
    let g = RMatrix::from_row_slice(2, 2, &[rows[0][0], rows[0][1], rows[1][0], rows[1][1]]);
    if (g[(0, 1)] - g[(1, 0)]).abs() > 1e-12 {
        return Err(Error::Domain("weight matrix is not symmetric".into()));
    }
    spinj_core::linalg::psd_sqrt(&g)?;
    Ok(g)
}

/// `"t1,t2"`.
pub fn parse_theta(s: &str) -> Result<ParamPoint, Error> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Domain(format!("--theta expects \"t1,t2\", got {s:?}")));
    }
    ParamPoint::new(parse_f64(parts[0], "--theta")?, parse_f64(parts[1], "--theta")?)
}

/// `fibonacci:K`.
pub fn parse_grid(s: &str) -> Result<usize, Error> {
    let k = s
        .strip_prefix("fibonacci:")
        .ok_or_else(|| Error::Domain(format!("--grid expects fibonacci:K, got {s:?}")))?;
    let k: usize = k
        .parse()
        .map_err(|_| Error::Domain(format!("--grid: {k:?} is not a count")))?;
    if k == 0 {
        return Err(Error::Domain("--grid needs at least one point".into()));
    }
    Ok(k)
}

/// Family parameters as given on the command line.
#[derive(Clone, Debug, Default)]
pub struct FamilyParams {
    pub p: Option<f64>,
    pub r: Option<f64>,
    pub a: Option<f64>,
    pub weights: Option<std::path::PathBuf>,
}

/// Builds the weights for a single-point command. Returns any warning to print.
pub fn build_weights(
    family: FamilyArg,
    n: Option<usize>,
    params: &FamilyParams,
) -> Result<(WeightDistribution, Option<String>), Error> {
    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| Error::Domain(format!("--family {} needs {flag}", family.name())))
    };
    let need_n = || n.ok_or_else(|| Error::Domain("--n is required".into()));
    match family {
        FamilyArg::Binomial => Ok((binomial_weights(SpinSystem::new(need_n()?), need(params.p, "--p")?)?, None)),
        FamilyArg::Geometric => {
            let r = need(params.r, "--r")?;
            if r == 1.0 {
                return Err(Error::Domain("r must differ from 1".into()));
            }
            Ok((geometric_weights(SpinSystem::new(need_n()?), r)?, None))
        }
        FamilyArg::Delta => Ok((delta_weights(SpinSystem::new(need_n()?), need(params.a, "--a")?)?, None)),
        FamilyArg::Custom => {
            let path = params
                .weights
                .as_ref()
                .ok_or_else(|| Error::Domain("--family custom needs --weights PATH".into()))?;
            let (w, warning) = read_weights(path)?;
            let file_n = w.len() - 1;
            if let Some(n) = n {
                if n != file_n {
                    return Err(Error::Domain(format!(
                        "--n {n} does not match {} weights in {}",
                        w.len(),
                        path.display()
                    )));
                }
            }
            Ok((WeightDistribution::custom(SpinSystem::new(file_n), w)?, warning))
        }
    }
}
