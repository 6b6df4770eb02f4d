//! Diagonal probe states, their SU(2) orbits, and the fidelity on the
//! parameter sphere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{OperatorMatrix, Spectrum};
use crate::spin::{exp_i_hermitian, rotation_generator, SpinSystem};

/// Which constructor produced a [`WeightDistribution`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum FamilyTag {
    Binomial { p: f64 },
    Geometric { r: f64 },
    Delta { a: f64 },
    Custom,
}

impl FamilyTag {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyTag::Binomial { .. } => "binomial",
            FamilyTag::Geometric { .. } => "geometric",
            FamilyTag::Delta { .. } => "delta",
            FamilyTag::Custom => "custom",
        }
    }

    pub fn parameter(&self) -> Option<f64> {
        match *self {
            FamilyTag::Binomial { p } => Some(p),
            FamilyTag::Geometric { r } => Some(r),
            FamilyTag::Delta { a } => Some(a),
            FamilyTag::Custom => None,
        }
    }
}

/// Probabilities p_m over m = −j..j (index k = j+m).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightDistribution {
    sys: SpinSystem,
    weights: Vec<f64>,
    family: FamilyTag,
}

pub const WEIGHT_SUM_TOL: f64 = 1e-12;

impl WeightDistribution {
    /// Validated user weights: nonnegative, length n+1, summing to 1 within 1e-12.
    pub fn custom(sys: SpinSystem, weights: Vec<f64>) -> Result<Self> {
        Self::validated(sys, weights, FamilyTag::Custom)
    }

    /// Normalizes nonnegative raw weights; returns the distribution and the
    /// original sum.
    pub fn custom_normalized(sys: SpinSystem, raw: Vec<f64>) -> Result<(Self, f64)> {
        check_shape(sys, &raw)?;
        let sum: f64 = raw.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::Domain("weights must have a positive finite sum".into()));
        }
        let weights = raw.iter().map(|w| w / sum).collect();
        Ok((Self::validated(sys, weights, FamilyTag::Custom)?, sum))
    }

    fn validated(sys: SpinSystem, weights: Vec<f64>, family: FamilyTag) -> Result<Self> {
        check_shape(sys, &weights)?;
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Domain(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self {
            sys,
            weights,
            family,
        })
    }

    pub fn sys(&self) -> SpinSystem {
        self.sys
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    /// Weight at basis index k = j+m.
    pub fn at(&self, k: usize) -> f64 {
        self.weights[k]
    }

    /// Σ_k k·p_k, the mean occupation of the second mode.
    pub fn mean_index(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| k as f64 * w)
            .sum()
    }
}

fn check_shape(sys: SpinSystem, w: &[f64]) -> Result<()> {
    if w.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: w.len(),
        });
    }
    if let Some(bad) = w.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::Domain(format!("weight {bad} is not a nonnegative number")));
    }
    Ok(())
}

fn renormalize(mut w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    for x in &mut w {
        *x /= s;
    }
    w
}

/// p_m = C(n, j+m) p^{j+m} (1−p)^{j−m}, computed in log space.
pub fn binomial_weights(sys: SpinSystem, p: f64) -> Result<WeightDistribution> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("binomial p must lie in (0,1), got {p}")));
    }
    let n = sys.n();
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut ln_choose = 0.0;
    let mut w = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            ln_choose += ((n - k + 1) as f64 / k as f64).ln();
        }
        w.push((ln_choose + k as f64 * lp + (n - k) as f64 * lq).exp());
    }
    Ok(WeightDistribution {
        sys,
        weights: renormalize(w),
        family: FamilyTag::Binomial { p },
    })
}

/// p_m = (r−1)/(r^{n+1}−1)·r^{j+m}, evaluated relative to the largest term so
/// that large n does not overflow.
pub fn geometric_weights(sys: SpinSystem, r: f64) -> Result<WeightDistribution> {
    if !(r > 0.0) || r == 1.0 || !r.is_finite() {
        return Err(Error::Domain(format!("geometric r must be positive and differ from 1, got {r}")));
    }
    let n = sys.n() as i32;
    let w: Vec<f64> = if r > 1.0 {
        let head = (1.0 - 1.0 / r) / (1.0 - r.powi(-(n + 1)));
        (0..=n).map(|k| head * r.powi(k - n)).collect()
    } else {
        let head = (1.0 - r) / (1.0 - r.powi(n + 1));
        (0..=n).map(|k| head * r.powi(k)).collect()
    };
    Ok(WeightDistribution {
        sys,
        weights: renormalize(w),
        family: FamilyTag::Geometric { r },
    })
}

/// p_m = δ_{m,a}; `a` must lie on the m grid of the system.
pub fn delta_weights(sys: SpinSystem, a: f64) -> Result<WeightDistribution> {
    let k = sys
        .index_of(a)
        .ok_or_else(|| Error::Domain(format!("a = {a} is not one of m = -j..j for n = {}", sys.n())))?;
    let mut w = vec![0.0; sys.dim()];
    w[k] = 1.0;
    Ok(WeightDistribution {
        sys,
        weights: w,
        family: FamilyTag::Delta { a },
    })
}

/// A point θ = (θ₁, θ₂) with |θ| ≤ π.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub theta1: f64,
    pub theta2: f64,
}

impl ParamPoint {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        let p = Self { theta1, theta2 };
        if !(p.norm() <= PI + 1e-12) {
            return Err(Error::Domain(format!("|theta| = {} exceeds pi", p.norm())));
        }
        Ok(p)
    }

    pub fn origin() -> Self {
        Self {
            theta1: 0.0,
            theta2: 0.0,
        }
    }

    /// Point with the given |θ| and φ, where e^{−iφ}|θ| = θ₁ + iθ₂.
    pub fn from_polar(norm: f64, phi: f64) -> Result<Self> {
        Self::new(norm * phi.cos(), -norm * phi.sin())
    }

    pub fn norm(&self) -> f64 {
        self.theta1.hypot(self.theta2)
    }

    /// φ with e^{−iφ}|θ| = θ₁ + iθ₂; zero at the origin.
    pub fn phi(&self) -> f64 {
        if self.norm() == 0.0 {
            0.0
        } else {
            -self.theta2.atan2(self.theta1)
        }
    }

    /// Unit vector with polar angle |θ| and azimuth φ.
    pub fn bloch(&self) -> [f64; 3] {
        let (s, c) = self.norm().sin_cos();
        let (sp, cp) = self.phi().sin_cos();
        [s * cp, s * sp, c]
    }

    /// Inverse of [`ParamPoint::bloch`] for a unit vector.
    pub fn from_bloch(v: [f64; 3]) -> Self {
        let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let z = (v[2] / len).clamp(-1.0, 1.0);
        let norm = z.acos();
        let phi = v[1].atan2(v[0]);
        Self {
            theta1: norm * phi.cos(),
            theta2: -norm * phi.sin(),
        }
    }
}

pub fn bloch_point(theta: &ParamPoint) -> [f64; 3] {
    theta.bloch()
}

/// A density operator with its (possibly exactly known) spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    sys: SpinSystem,
    matrix: OperatorMatrix,
    spectrum: Spectrum,
}

pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

impl DensityState {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(sys: SpinSystem, matrix: OperatorMatrix) -> Result<Self> {
        if matrix.dim() != sys.dim() {
            return Err(Error::DimensionMismatch {
                expected: sys.dim(),
                got: matrix.dim(),
            });
        }
        let matrix = if matrix.is_hermitian() {
            matrix
        } else {
            matrix
                .into_hermitian()
                .map_err(|_| Error::InvalidState("matrix is not Hermitian".into()))?
        };
        let spectrum = Spectrum::of(&matrix)?;
        Self::checked(sys, matrix, spectrum)
    }

    fn checked(sys: SpinSystem, matrix: OperatorMatrix, spectrum: Spectrum) -> Result<Self> {
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = spectrum.min_value();
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self {
            sys,
            matrix,
            spectrum,
        })
    }

    pub fn sys(&self) -> SpinSystem {
        self.sys
    }

    pub fn matrix(&self) -> &OperatorMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// Eigenvalues in ascending order.
    pub fn sorted_eigenvalues(&self) -> Vec<f64> {
        let mut v = self.spectrum.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// ρ = Σ p_m |j;m⟩⟨j;m|.
pub fn diagonal_state(w: &WeightDistribution) -> DensityState {
    let matrix = OperatorMatrix::from_real_diagonal(w.weights());
    let spectrum = Spectrum {
        values: w.weights().to_vec(),
        vectors: None,
        exact: true,
    };
    DensityState::checked(w.sys(), matrix, spectrum).expect("validated weights give a valid state")
}

/// U_θ = exp(i(θ₁J₁ + θ₂J₂)).
pub fn orbit_unitary(sys: SpinSystem, theta: &ParamPoint) -> OperatorMatrix {
    exp_i_hermitian(&rotation_generator(sys, [theta.theta1, theta.theta2, 0.0]))
        .expect("rotation generator is Hermitian")
}

/// ρ_θ = U_θ ρ U_θ†; the eigenvalues are carried over from ρ.
pub fn evolved_state(rho: &DensityState, theta: &ParamPoint) -> DensityState {
    let u = orbit_unitary(rho.sys(), theta);
    let matrix = rho.matrix().conjugate_by(&u);
    let vectors = match &rho.spectrum.vectors {
        None => u.entries().clone(),
        Some(v) => u.entries() * v,
    };
    let spectrum = Spectrum {
        values: rho.spectrum.values.clone(),
        vectors: Some(vectors),
        exact: rho.spectrum.exact,
    };
    DensityState::checked(rho.sys(), matrix, spectrum).expect("unitary conjugation preserves validity")
}

/// R(θ, θ̂) = |cos(|θ|/2)cos(|θ̂|/2) + e^{i(φ̂−φ)} sin(|θ|/2)sin(|θ̂|/2)|².
pub fn fidelity_point(theta: &ParamPoint, theta_hat: &ParamPoint) -> f64 {
    let (s, c) = (theta.norm() / 2.0).sin_cos();
    let (sh, ch) = (theta_hat.norm() / 2.0).sin_cos();
    let dphi = theta_hat.phi() - theta.phi();
    let re = c * ch + dphi.cos() * s * sh;
    let im = dphi.sin() * s * sh;
    (re * re + im * im).clamp(0.0, 1.0)
}

/// η(θ̂) = 4(1 − R(0, θ̂)) = 4 sin²(|θ̂|/2).
pub fn error_function_point(theta_hat: &ParamPoint) -> f64 {
    let s = (theta_hat.norm() / 2.0).sin();
    4.0 * s * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_examples() {
        let w = binomial_weights(SpinSystem::new(1), 0.5).unwrap();
        assert_eq!(w.weights(), &[0.5, 0.5]);
        let w = binomial_weights(SpinSystem::new(2), 0.75).unwrap();
        for (x, e) in w.weights().iter().zip([0.0625, 0.375, 0.5625]) {
            assert!((x - e).abs() < 1e-14);
        }
        let w = binomial_weights(SpinSystem::new(100), 0.6).unwrap();
        assert!((w.mean_index() - 60.0).abs() < 1e-10);
    }

    #[test]
    fn binomial_rejects_bad_p() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(binomial_weights(SpinSystem::new(3), p), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn geometric_examples() {
        let w = geometric_weights(SpinSystem::new(1), 2.0).unwrap();
        assert!((w.at(0) - 1.0 / 3.0).abs() < 1e-15 && (w.at(1) - 2.0 / 3.0).abs() < 1e-15);
        let w = geometric_weights(SpinSystem::new(2), 3.0).unwrap();
        for (x, e) in w.weights().iter().zip([1.0 / 13.0, 3.0 / 13.0, 9.0 / 13.0]) {
            assert!((x - e).abs() < 1e-15);
        }
        let w = geometric_weights(SpinSystem::new(200), 2.0).unwrap();
        assert!(w.weights().iter().all(|x| x.is_finite()));
        assert!((w.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_rejects_bad_r() {
        for r in [1.0, 0.0, -2.0] {
            assert!(geometric_weights(SpinSystem::new(3), r).is_err());
        }
    }

    #[test]
    fn delta_examples() {
        let w = delta_weights(SpinSystem::new(4), 0.0).unwrap();
        assert_eq!(w.weights(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
        let w = delta_weights(SpinSystem::new(2), 1.0).unwrap();
        assert_eq!(w.at(2), 1.0);
        let w = delta_weights(SpinSystem::new(3), 0.5).unwrap();
        assert_eq!(w.at(2), 1.0);
        assert!(delta_weights(SpinSystem::new(3), 0.0).is_err());
        assert!(delta_weights(SpinSystem::new(2), 2.0).is_err());
    }

    #[test]
    fn custom_validation() {
        let sys = SpinSystem::new(2);
        assert!(WeightDistribution::custom(sys, vec![0.2, 0.3, 0.5]).is_ok());
        assert!(WeightDistribution::custom(sys, vec![0.2, 0.3, 0.6]).is_err());
        assert!(WeightDistribution::custom(sys, vec![-0.1, 0.6, 0.5]).is_err());
        assert!(WeightDistribution::custom(sys, vec![0.5, 0.5]).is_err());
        let (w, s) = WeightDistribution::custom_normalized(sys, vec![1.0, 1.0, 2.0]).unwrap();
        assert_eq!(s, 4.0);
        assert_eq!(w.weights(), &[0.25, 0.25, 0.5]);
    }

    #[test]
    fn diagonal_state_of_top_delta_is_rank_one() {
        let rho = diagonal_state(&delta_weights(SpinSystem::new(3), 1.5).unwrap());
        let rank = rho.spectrum().values.iter().filter(|&&p| p > 0.0).count();
        assert_eq!(rank, 1);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn evolved_at_origin_is_unchanged() {
        let rho = diagonal_state(&binomial_weights(SpinSystem::new(5), 0.3).unwrap());
        let out = evolved_state(&rho, &ParamPoint::origin());
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-14);
    }

    #[test]
    fn spin_half_flip_at_pi() {
        let rho = diagonal_state(&delta_weights(SpinSystem::new(1), 0.5).unwrap());
        let out = evolved_state(&rho, &ParamPoint::new(PI, 0.0).unwrap());
        let down = OperatorMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert!(out.matrix().max_abs_diff(&down) < 1e-12);
    }

    #[test]
    fn invalid_density_rejected() {
        let sys = SpinSystem::new(1);
        assert!(DensityState::new(sys, OperatorMatrix::from_real_diagonal(&[0.5, 0.6])).is_err());
        assert!(DensityState::new(sys, OperatorMatrix::from_real_diagonal(&[1.5, -0.5])).is_err());
        assert!(DensityState::new(sys, OperatorMatrix::from_real_diagonal(&[0.5, 0.5])).is_ok());
    }

    #[test]
    fn fidelity_examples() {
        let a = ParamPoint::new(0.4, -1.2).unwrap();
        assert!((fidelity_point(&a, &a) - 1.0).abs() < 1e-15);
        let o = ParamPoint::origin();
        assert!(fidelity_point(&o, &ParamPoint::new(PI, 0.0).unwrap()) < 1e-30);
        assert!((fidelity_point(&o, &ParamPoint::new(0.0, PI / 2.0).unwrap()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn error_function_examples() {
        assert_eq!(error_function_point(&ParamPoint::origin()), 0.0);
        assert!((error_function_point(&ParamPoint::new(PI, 0.0).unwrap()) - 4.0).abs() < 1e-15);
        // 4 sin²(x/2) = x² − x⁴/12 + x⁶/360 − …
        let e = error_function_point(&ParamPoint::new(0.01, 0.0).unwrap());
        assert!((e - (1e-4 - 1e-8 / 12.0 + 1e-12 / 360.0)).abs() < 1e-18);
        assert!(((e - 1e-4) / 1e-4).abs() < 1e-5);
    }

    #[test]
    fn bloch_poles_and_inverse() {
        let n = bloch_point(&ParamPoint::origin());
        assert_eq!(n, [0.0, 0.0, 1.0]);
        let s = bloch_point(&ParamPoint::new(0.0, PI).unwrap());
        assert!((s[2] + 1.0).abs() < 1e-15);
        let p = ParamPoint::new(0.7, -1.9).unwrap();
        let q = ParamPoint::from_bloch(p.bloch());
        assert!((p.theta1 - q.theta1).abs() < 1e-12 && (p.theta2 - q.theta2).abs() < 1e-12);
    }

    #[test]
    fn param_point_range() {
        assert!(ParamPoint::new(3.0, 1.0).is_err());
        assert!(ParamPoint::new(PI, 0.0).is_ok());
        assert_eq!(ParamPoint::origin().phi(), 0.0);
    }
}
