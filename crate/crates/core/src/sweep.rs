//! Grid evaluation of local and global bounds over (family parameter, n).

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::global::{global_report, GlobalReport};
use crate::linalg::RMatrix;
use crate::local::{
    d_invariance_check, d_matrix, hn_upper_from_x_star, rld_bound, rld_bound_d_invariant, rld_fisher,
    sld_bound, sld_fisher_with, slds, unitary_model_derivs,
};
use crate::spin::SpinSystem;
use crate::states::{binomial_weights, delta_weights, diagonal_state, geometric_weights, WeightDistribution};

/// Relative tolerance of the per-row ordering checks.
pub const ORDER_TOL: f64 = 1e-8;
/// Tolerance of the closed-form agreement check.
pub const CLOSED_FORM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum FamilySweep {
    Binomial { p: Vec<f64> },
    Geometric { r: Vec<f64> },
    Delta { a: Vec<f64> },
    /// One fixed weight vector; `n_values` must be `[len − 1]`.
    Custom { weights: Vec<f64> },
}

impl FamilySweep {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySweep::Binomial { .. } => "binomial",
            FamilySweep::Geometric { .. } => "geometric",
            FamilySweep::Delta { .. } => "delta",
            FamilySweep::Custom { .. } => "custom",
        }
    }

    fn params(&self) -> Vec<Option<f64>> {
        match self {
            FamilySweep::Binomial { p } => p.iter().copied().map(Some).collect(),
            FamilySweep::Geometric { r } => r.iter().copied().map(Some).collect(),
            FamilySweep::Delta { a } => a.iter().copied().map(Some).collect(),
            FamilySweep::Custom { .. } => vec![None],
        }
    }

    fn weights(&self, n: usize, param: Option<f64>) -> Result<WeightDistribution> {
        let sys = SpinSystem::new(n);
        match (self, param) {
            (FamilySweep::Binomial { .. }, Some(p)) => binomial_weights(sys, p),
            (FamilySweep::Geometric { .. }, Some(r)) => geometric_weights(sys, r),
            (FamilySweep::Delta { .. }, Some(a)) => delta_weights(sys, a),
            (FamilySweep::Custom { weights }, None) => WeightDistribution::custom(sys, weights.clone()),
            _ => unreachable!("params() pairs each family with its parameter shape"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOutput {
    Sld,
    Rld,
    HnUpper,
    GlobalEta,
    Asymptotics,
}

impl SweepOutput {
    pub fn all() -> BTreeSet<SweepOutput> {
        [Self::Sld, Self::Rld, Self::HnUpper, Self::GlobalEta, Self::Asymptotics]
            .into_iter()
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub family: FamilySweep,
    pub n_values: Vec<usize>,
    pub weight_matrix: [[f64; 2]; 2],
    pub outputs: BTreeSet<SweepOutput>,
}

impl SweepSpec {
    pub fn new(family: FamilySweep, n_values: Vec<usize>) -> Self {
        Self {
            family,
            n_values,
            weight_matrix: [[1.0, 0.0], [0.0, 1.0]],
            outputs: SweepOutput::all(),
        }
    }

    pub fn weight(&self) -> RMatrix {
        let g = self.weight_matrix;
        RMatrix::from_row_slice(2, 2, &[g[0][0], g[0][1], g[1][0], g[1][1]])
    }

    /// Checks the whole grid up front; any failure aborts the sweep.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.n_values.is_empty() {
            return bad("n_values is empty".into());
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_values must be strictly ascending".into());
        }
        if self.n_values[0] == 0 {
            return bad("n must be at least 1".into());
        }
        let params = self.family.params();
        if params.is_empty() {
            return bad(format!("no {} parameters given", self.family.name()));
        }
        if let FamilySweep::Geometric { r } = &self.family {
            if let Some(bad_r) = r.iter().find(|&&r| r == 1.0) {
                return bad(format!("r must differ from 1 (got {bad_r})"));
            }
        }
        if let FamilySweep::Custom { weights } = &self.family {
            if self.n_values != [weights.len().saturating_sub(1)] {
                return bad(format!(
                    "custom weights of length {} need n_values = [{}]",
                    weights.len(),
                    weights.len().saturating_sub(1)
                ));
            }
        }
        for &n in &self.n_values {
            for &p in &params {
                self.family
                    .weights(n, p)
                    .map_err(|e| Error::InvalidSpec(format!("n = {n}: {e}")))?;
            }
        }
        let g = self.weight();
        if (g[(0, 1)] - g[(1, 0)]).abs() > 1e-12 {
            return bad("weight matrix is not symmetric".into());
        }
        if crate::linalg::psd_sqrt(&g).is_err() {
            return bad("weight matrix is not positive semidefinite".into());
        }
        Ok(())
    }
}

/// One (n, parameter) grid point. Absent values carry a reason code in `reasons`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub family: String,
    pub param: Option<f64>,
    pub sld_bound: Option<f64>,
    pub rld_bound: Option<f64>,
    pub hn_upper: Option<f64>,
    pub bfy_lhs: Option<f64>,
    pub bfy_rhs: Option<f64>,
    pub bfy_holds: Option<bool>,
    pub r_max: Option<f64>,
    pub eta: Option<f64>,
    pub asymptotic_eta: Option<f64>,
    pub eta_over_sld: Option<f64>,
    /// `quantity:CODE` pairs separated by `;`.
    pub reasons: String,
    /// Failed row-level invariant checks separated by `;`; empty when all hold.
    pub violations: String,
}

fn evaluate(spec: &SweepSpec, n: usize, param: Option<f64>) -> SweepRow {
    let w = spec
        .family
        .weights(n, param)
        .expect("validated before evaluation");
    let g = spec.weight();
    let want = |o: SweepOutput| spec.outputs.contains(&o);
    let mut reasons: Vec<String> = Vec::new();
    let mut violations: Vec<String> = Vec::new();

    let rho = diagonal_state(&w);
    let model = unitary_model_derivs(&rho);
    let mut sld = None;
    let mut rld = None;
    let mut hn = None;

    let needs_local = want(SweepOutput::Sld) || want(SweepOutput::Rld) || want(SweepOutput::HnUpper);
    if needs_local {
        match slds(&model) {
            Err(e) => reasons.push(format!("sld:{}", e.code())),
            Ok(ls) => {
                let f = sld_fisher_with(&rho, &ls);
                match sld_bound(&f, &g) {
                    Err(e) => reasons.push(format!("sld:{}", e.code())),
                    Ok(s) => {
                        sld = Some(s);
                        if want(SweepOutput::Rld) {
                            match rld_fisher(&model).and_then(|ft| rld_bound(&ft, &g)) {
                                Ok(v) => rld = Some(v),
                                Err(e) => reasons.push(format!("rld:{}", e.code())),
                            }
                        }
                        if want(SweepOutput::HnUpper) {
                            match hn_upper_from_x_star(&model, &f, &ls, &g) {
                                Ok(v) => hn = Some(v),
                                Err(e) => reasons.push(format!("hn_upper:{}", e.code())),
                            }
                        }
                        let inv = d_invariance_check(&model, &ls);
                        let d_invariant = matches!(inv, Ok(ref i) if i.holds);
                        let tol = ORDER_TOL * s;
                        if let (true, Some(r)) = (d_invariant, rld) {
                            if r < s - tol || r > 2.0 * s + tol {
                                violations.push("rld_outside_[sld,2sld]".into());
                            }
                            let dm = d_matrix(&model, &ls);
                            if let Ok(closed) = rld_bound_d_invariant(&f, &dm, &g) {
                                if (closed - r).abs() > ORDER_TOL * r {
                                    violations.push("rld_closed_form_mismatch".into());
                                }
                            }
                        }
                        if let Some(h) = hn {
                            if h < s - tol || h > 2.0 * s + tol {
                                violations.push("hn_outside_[sld,2sld]".into());
                            }
                        }
                    }
                }
            }
        }
    }
    if !want(SweepOutput::Sld) {
        sld = None;
    }

    let mut global: Option<GlobalReport> = None;
    if want(SweepOutput::GlobalEta) || want(SweepOutput::Asymptotics) {
        match global_report(&w) {
            Ok(gr) => {
                if !gr.bfy_holds {
                    reasons.push("r_max:BFY_FAILS".into());
                }
                let slice = (n as f64 + 2.0) * gr.bfy_lhs + n as f64 * gr.bfy_rhs;
                if (slice - 1.0).abs() > 1e-10 {
                    violations.push("slice_completeness".into());
                }
                if let (Some(r), Some(cf)) = (gr.r_max, gr.closed_form_r) {
                    if (r - cf).abs() > CLOSED_FORM_TOL {
                        violations.push("closed_form_mismatch".into());
                    }
                }
                if gr.r_max.is_some_and(|r| !(0.0..=1.0).contains(&r)) {
                    violations.push("r_max_out_of_range".into());
                }
                global = Some(gr);
            }
            Err(e) => reasons.push(format!("global:{}", e.code())),
        }
    }

    let (bfy_lhs, bfy_rhs, bfy_holds, r_max, eta, asym) = match (&global, want(SweepOutput::GlobalEta)) {
        (Some(gr), true) => (
            Some(gr.bfy_lhs),
            Some(gr.bfy_rhs),
            Some(gr.bfy_holds),
            gr.r_max,
            gr.eta,
            gr.asymptotic_eta,
        ),
        (Some(gr), false) => (None, None, None, None, None, gr.asymptotic_eta),
        (None, _) => (None, None, None, None, None, None),
    };
    let asymptotic_eta = if want(SweepOutput::Asymptotics) { asym } else { None };

    SweepRow {
        n,
        family: spec.family.name().to_string(),
        param,
        sld_bound: sld,
        rld_bound: rld,
        hn_upper: hn,
        bfy_lhs,
        bfy_rhs,
        bfy_holds,
        r_max,
        eta,
        asymptotic_eta,
        eta_over_sld: match (eta, sld) {
            (Some(e), Some(s)) if s > 0.0 => Some(e / s),
            _ => None,
        },
        reasons: reasons.join(";"),
        violations: violations.join(";"),
    }
}

/// Evaluates every (parameter, n) pair, parameters outermost, n ascending.
/// Rows are computed in parallel; output order is fixed.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let grid: Vec<(usize, Option<f64>)> = spec
        .family
        .params()
        .into_iter()
        .flat_map(|p| spec.n_values.iter().map(move |&n| (n, p)))
        .collect();
    Ok(grid.par_iter().map(|&(n, p)| evaluate(spec, n, p)).collect())
}
