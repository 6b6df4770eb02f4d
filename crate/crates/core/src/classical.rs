//! Classical number-basis baselines: the direct binomial estimator and the
//! truncated geometric exponential family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this |(n+1)θ| the closed forms lose digits to cancellation and the
/// moments are summed directly.
const SMALL_THETA: f64 = 1e-2;

fn require_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("p = {p} outside (0, 1)")));
    }
    Ok(())
}

fn require_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    Ok(())
}

/// p(1−p)/n, the MSE of k/n for k ~ Binom(n, p).
pub fn binomial_direct_mse(n: usize, p: f64) -> Result<f64> {
    require_n(n)?;
    require_p(p)?;
    Ok(p * (1.0 - p) / n as f64)
}

/// Fisher information n/(p(1−p)) of Binom(n, p).
pub fn binomial_fisher(n: usize, p: f64) -> Result<f64> {
    require_n(n)?;
    require_p(p)?;
    Ok(n as f64 / (p * (1.0 - p)))
}

/// Binom(n, p) probabilities, built in log space.
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut log_c = 0.0;
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            log_c += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        out.push((log_c + k as f64 * lp + (n - k) as f64 * lq).exp());
    }
    out
}

/// Mean and variance of the estimator k/n by exact summation.
pub fn binomial_estimator_moments(n: usize, p: f64) -> Result<(f64, f64)> {
    require_n(n)?;
    require_p(p)?;
    let pmf = binomial_pmf(n, p);
    let nf = n as f64;
    let mean: f64 = pmf.iter().enumerate().map(|(k, w)| w * k as f64 / nf).sum();
    let var: f64 = pmf
        .iter()
        .enumerate()
        .map(|(k, w)| w * (k as f64 / nf - mean).powi(2))
        .sum();
    Ok((mean, var))
}

/// P_θ(k) ∝ e^{θk} on k = 0..=n.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricClassicalModel {
    pub n: usize,
    pub theta: f64,
}

impl GeometricClassicalModel {
    pub fn new(n: usize, theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::Domain(format!("theta = {theta} is not finite")));
        }
        Ok(Self { n, theta })
    }

    /// θ = log r.
    pub fn from_ratio(n: usize, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("r = {r} must be positive")));
        }
        Self::new(n, r.ln())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let peak = if self.theta >= 0.0 { self.n as f64 } else { 0.0 };
        let raw: Vec<f64> = (0..=self.n)
            .map(|k| (self.theta * (k as f64 - peak)).exp())
            .collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / s).collect()
    }

    /// (Σ k P, Σ (k − mean)² P) by direct summation.
    pub fn summed_moments(&self) -> (f64, f64) {
        let p = self.probabilities();
        let mean: f64 = p.iter().enumerate().map(|(k, w)| k as f64 * w).sum();
        let var: f64 = p
            .iter()
            .enumerate()
            .map(|(k, w)| (k as f64 - mean).powi(2) * w)
            .sum();
        (mean, var)
    }

    pub fn expectation(&self) -> f64 {
        geometric_expectation_param(self.n, self.theta)
    }

    pub fn fisher(&self) -> f64 {
        geometric_fisher_natural(self.n, self.theta)
    }
}

/// η(θ) = Σ k P_θ(k) = n + (n+1)/(e^{(n+1)θ} − 1) − 1/(e^θ − 1); n/2 at θ = 0.
pub fn geometric_expectation_param(n: usize, theta: f64) -> f64 {
    let nf = n as f64;
    if theta == 0.0 {
        return nf / 2.0;
    }
    if ((nf + 1.0) * theta).abs() < SMALL_THETA {
        return GeometricClassicalModel { n, theta }.summed_moments().0;
    }
    nf + (nf + 1.0) / ((nf + 1.0) * theta).exp_m1() - 1.0 / theta.exp_m1()
}

/// F_θ = Var_θ(k) = 1/(4 sinh²(θ/2)) − (n+1)²/(4 sinh²((n+1)θ/2)); n(n+2)/12 at θ = 0.
pub fn geometric_fisher_natural(n: usize, theta: f64) -> f64 {
    let nf = n as f64;
    if theta == 0.0 {
        return nf * (nf + 2.0) / 12.0;
    }
    if ((nf + 1.0) * theta).abs() < SMALL_THETA {
        return GeometricClassicalModel { n, theta }.summed_moments().1;
    }
    let s1 = (theta / 2.0).sinh();
    let s2 = ((nf + 1.0) * theta / 2.0).sinh();
    1.0 / (4.0 * s1 * s1) - (nf + 1.0).powi(2) / (4.0 * s2 * s2)
}
