//! Optimal covariant measurement on the SU(2) orbit: the BFY condition, the
//! maximal worst-case average fidelity and the error η = 4(1 − R).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{coupling_projectors, CouplingProjectors};
use crate::states::{diagonal_state, DensityState, FamilyTag, WeightDistribution};

/// Ties in the BFY inequality count as holding within this.
pub const BFY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalReport {
    pub n: usize,
    pub bfy_lhs: f64,
    pub bfy_rhs: f64,
    pub bfy_holds: bool,
    pub r_max: Option<f64>,
    pub eta: Option<f64>,
    pub closed_form_r: Option<f64>,
    pub asymptotic_eta: Option<f64>,
}

/// Tr P(|↑⟩⟨↑| ⊗ ρ) for one coupled-block projector P, read off the up-up block.
fn up_slice_trace(proj: &CouplingProjectors, p: &crate::linalg::OperatorMatrix, rho: &DensityState) -> f64 {
    let d = proj.sys.dim();
    let r = rho.matrix();
    let mut acc = 0.0;
    for a in 0..d {
        for b in 0..d {
            let pab = p.get(proj.product_index(true, a), proj.product_index(true, b));
            acc += (pab * r.get(b, a)).re;
        }
    }
    acc
}

/// LHS = Tr P₊(|↑⟩⟨↑|⊗ρ)/(2j+2), RHS = Tr P₋(|↑⟩⟨↑|⊗ρ)/(2j).
pub fn bfy_sides(rho: &DensityState) -> Result<(f64, f64)> {
    let proj = coupling_projectors(rho.sys())?;
    bfy_sides_with(&proj, rho)
}

/// As [`bfy_sides`] with precomputed projectors.
pub fn bfy_sides_with(proj: &CouplingProjectors, rho: &DensityState) -> Result<(f64, f64)> {
    if proj.sys != rho.sys() {
        return Err(Error::DimensionMismatch {
            expected: proj.sys.dim(),
            got: rho.sys().dim(),
        });
    }
    let two_j = proj.sys.n() as f64;
    let lhs = up_slice_trace(proj, &proj.p_plus, rho) / (two_j + 2.0);
    let rhs = up_slice_trace(proj, &proj.p_minus, rho) / two_j;
    Ok((lhs, rhs))
}

pub fn bfy_holds_sides(lhs: f64, rhs: f64) -> bool {
    lhs >= rhs - BFY_TOL
}

pub fn bfy_holds(rho: &DensityState) -> Result<bool> {
    let (l, r) = bfy_sides(rho)?;
    Ok(bfy_holds_sides(l, r))
}

/// R_max = (2j+1)·LHS, defined only under the BFY condition.
pub fn optimal_r(rho: &DensityState) -> Result<f64> {
    let (lhs, rhs) = bfy_sides(rho)?;
    r_from_sides(rho.sys().n(), lhs, rhs)
}

fn r_from_sides(n: usize, lhs: f64, rhs: f64) -> Result<f64> {
    if !bfy_holds_sides(lhs, rhs) {
        return Err(Error::BfyViolated { lhs, rhs });
    }
    Ok(((n as f64 + 1.0) * lhs).clamp(0.0, 1.0))
}

/// η = 4(1 − R).
pub fn eta_from_r(r: f64) -> f64 {
    4.0 * (1.0 - r)
}

fn require_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    Ok(())
}

/// (np + 1)/(n + 2), the binomial optimum under BFY.
pub fn binomial_r_closed(n: usize, p: f64) -> Result<f64> {
    require_n(n)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p = {p} outside [0, 1]")));
    }
    let n = n as f64;
    Ok((n * p + 1.0) / (n + 2.0))
}

/// 1 − R for the geometric family, r > 1, in decaying form:
/// (r/(r−1) − (n+1) q/(1−q)) / (n+2) with q = r^{−(n+1)}.
fn geometric_one_minus_r(n: usize, r: f64) -> f64 {
    let nf = n as f64;
    let x = -(nf + 1.0) * r.ln();
    let tail = (nf + 1.0) * x.exp() / -x.exp_m1();
    (r / (r - 1.0) - tail) / (nf + 2.0)
}

/// Geometric optimum (1 + E[k])/(n + 2), r > 1.
pub fn geometric_r_closed(n: usize, r: f64) -> Result<f64> {
    require_n(n)?;
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::Domain(format!("geometric closed form needs r > 1, got {r}")));
    }
    Ok(1.0 - geometric_one_minus_r(n, r))
}

/// Exact geometric error 4(1 − R), without forming R.
pub fn geometric_eta_exact(n: usize, r: f64) -> Result<f64> {
    geometric_r_closed(n, r)?;
    Ok(4.0 * geometric_one_minus_r(n, r))
}

/// Two-term expansion 4r/(n(r−1)) − 8/(n²(r−1)) as it is usually quoted.
pub fn geometric_eta_expansion(n: usize, r: f64) -> Result<f64> {
    require_n(n)?;
    if r <= 1.0 {
        return Err(Error::Domain(format!("expansion needs r > 1, got {r}")));
    }
    let n = n as f64;
    Ok(4.0 * r / (n * (r - 1.0)) - 8.0 / (n * n * (r - 1.0)))
}

/// Two-term expansion of the exact error: 4r/(n(r−1)) − 8r/(n²(r−1)).
/// The remainder is 16r/((r−1)n²(n+2)) + O(r^{−n}).
pub fn geometric_eta_asymptotic(n: usize, r: f64) -> Result<f64> {
    require_n(n)?;
    if r <= 1.0 {
        return Err(Error::Domain(format!("expansion needs r > 1, got {r}")));
    }
    let n = n as f64;
    Ok(4.0 * r / (n * (r - 1.0)) - 8.0 * r / (n * n * (r - 1.0)))
}

/// (n/2 + a + 1)/(n + 2); requires a ≥ 0, which is exactly the BFY condition.
pub fn delta_r_closed(n: usize, a: f64) -> Result<f64> {
    require_n(n)?;
    let j = n as f64 / 2.0;
    if a < 0.0 || a > j {
        return Err(Error::Domain(format!("delta closed form needs 0 ≤ a ≤ {j}, got {a}")));
    }
    Ok((j + a + 1.0) / (n as f64 + 2.0))
}

/// Global quantities for an arbitrary state (no closed form).
pub fn global_report_state(rho: &DensityState) -> Result<GlobalReport> {
    let (lhs, rhs) = bfy_sides(rho)?;
    let n = rho.sys().n();
    let r_max = r_from_sides(n, lhs, rhs).ok();
    Ok(GlobalReport {
        n,
        bfy_lhs: lhs,
        bfy_rhs: rhs,
        bfy_holds: bfy_holds_sides(lhs, rhs),
        r_max,
        eta: r_max.map(eta_from_r),
        closed_form_r: None,
        asymptotic_eta: None,
    })
}

/// Global quantities for a family member, with its closed form and
/// asymptotics where they apply.
pub fn global_report(w: &WeightDistribution) -> Result<GlobalReport> {
    let mut report = global_report_state(&diagonal_state(w))?;
    let n = w.sys().n();
    match w.family() {
        FamilyTag::Binomial { p } => {
            report.closed_form_r = Some(binomial_r_closed(n, p)?);
        }
        FamilyTag::Geometric { r } if r > 1.0 => {
            report.closed_form_r = Some(geometric_r_closed(n, r)?);
            report.asymptotic_eta = Some(geometric_eta_expansion(n, r)?);
            // 1 − R is small here; the decaying form keeps more digits than 4(1 − R).
            if report.r_max.is_some() {
                report.eta = Some(geometric_eta_exact(n, r)?);
            }
        }
        FamilyTag::Delta { a } if a >= 0.0 => {
            report.closed_form_r = Some(delta_r_closed(n, a)?);
        }
        _ => {}
    }
    if let (Some(_), None) = (report.closed_form_r, report.r_max) {
        report.closed_form_r = None;
    }
    Ok(report)
}
