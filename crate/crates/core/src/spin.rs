//! Spin-j operator algebra in the |j;m⟩ basis, m ascending from −j to j.
//!
//! Basis index `k ∈ 0..=n` corresponds to `m = k − j`, which is also the
//! occupation of the second bosonic mode in |n−k, k⟩.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, OperatorMatrix, Spectrum, C64};

/// A spin-j irrep realised on n bosons in two modes: `j = n/2`, `dim = n+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinSystem {
    n: usize,
}

impl SpinSystem {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j(&self) -> f64 {
        self.n as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// Magnetic quantum number of basis index `k`.
    pub fn m_of(&self, k: usize) -> f64 {
        k as f64 - self.j()
    }

    /// Basis index of `m`, if `m` lies on the grid −j, −j+1, …, j.
    pub fn index_of(&self, m: f64) -> Option<usize> {
        let k = m + self.j();
        let rounded = k.round();
        if (k - rounded).abs() > 1e-9 || rounded < 0.0 || rounded > self.n as f64 {
            None
        } else {
            Some(rounded as usize)
        }
    }

    pub fn m_values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim()).map(move |k| self.m_of(k))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Raising-operator coefficient `√((j−m)(j+m+1))` for the step m → m+1.
pub fn ladder_coefficient(j: f64, m: f64) -> f64 {
    ((j - m) * (j + m + 1.0)).max(0.0).sqrt()
}

/// J₊ = Σ √((j−m)(j+m+1)) |m+1⟩⟨m|.
pub fn ladder_plus(sys: SpinSystem) -> OperatorMatrix {
    let d = sys.dim();
    let mut m = CMatrix::zeros(d, d);
    for k in 0..sys.n() {
        m[(k + 1, k)] = c(ladder_coefficient(sys.j(), sys.m_of(k)), 0.0);
    }
    OperatorMatrix::new(m).expect("square by construction")
}

/// J₋ = J₊†.
pub fn ladder_minus(sys: SpinSystem) -> OperatorMatrix {
    ladder_plus(sys).adjoint()
}

/// J₁ = (J₊+J₋)/2, J₂ = (J₊−J₋)/(2i), J₃ = diag(m).
pub fn angular_momentum(sys: SpinSystem, axis: Axis) -> OperatorMatrix {
    match axis {
        Axis::Z => OperatorMatrix::from_real_diagonal(&sys.m_values().collect::<Vec<_>>()),
        Axis::X | Axis::Y => {
            let plus = ladder_plus(sys);
            let minus = ladder_minus(sys);
            let m = if axis == Axis::X {
                (plus.entries() + minus.entries()) * c(0.5, 0.0)
            } else {
                (plus.entries() - minus.entries()) * c(0.0, -0.5)
            };
            OperatorMatrix::hermitian_unchecked(m)
        }
    }
}

/// J₁² + J₂² + J₃², evaluated by matrix products.
pub fn casimir(sys: SpinSystem) -> OperatorMatrix {
    let mut acc = OperatorMatrix::zeros(sys.dim());
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        let j = angular_momentum(sys, axis);
        acc = &acc + &(&j * &j);
    }
    acc.into_hermitian().expect("sum of squares of Hermitian operators")
}

/// `exp(i·h)` for Hermitian `h`, via its spectral decomposition.
pub fn exp_i_hermitian(h: &OperatorMatrix) -> Result<OperatorMatrix> {
    let spec = Spectrum::of(h)?;
    let d = spec.dim();
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        spec.values.iter().map(|&x| C64::from_polar(1.0, x)),
    ));
    OperatorMatrix::new(spec.from_eigenbasis(&phases))
}

/// Generator `θ₁J₁ + θ₂J₂ + θ₃J₃`.
pub fn rotation_generator(sys: SpinSystem, angles: [f64; 3]) -> OperatorMatrix {
    let mut acc = OperatorMatrix::zeros(sys.dim());
    for (axis, &a) in [Axis::X, Axis::Y, Axis::Z].iter().zip(angles.iter()) {
        if a != 0.0 {
            acc = &acc + &angular_momentum(sys, *axis).scale(a);
        }
    }
    acc
}

/// `exp(i(θ₁J₁ + θ₂J₂ + θ₃J₃))` on spin j.
pub fn rotation(sys: SpinSystem, angles: [f64; 3]) -> OperatorMatrix {
    exp_i_hermitian(&rotation_generator(sys, angles)).expect("generator is Hermitian")
}

/// Projectors of ℋ_½ ⊗ ℋ_j onto total spin j+½ and j−½.
///
/// Tensor ordering: spin-½ factor first, so the product index is
/// `s·(n+1) + k` with `s = 0` for m = −½ and `s = 1` for m = +½.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingProjectors {
    pub sys: SpinSystem,
    pub p_plus: OperatorMatrix,
    pub p_minus: OperatorMatrix,
}

impl CouplingProjectors {
    pub fn dim(&self) -> usize {
        2 * self.sys.dim()
    }

    /// Index of |s⟩⊗|j;k⟩ in the product space (`up` is m = +½).
    pub fn product_index(&self, up: bool, k: usize) -> usize {
        usize::from(up) * self.sys.dim() + k
    }
}

/// Builds the coupled basis from Clebsch-Gordan coefficients (Condon-Shortley
/// phases) and sums the outer products:
///
/// |j+½; m+½⟩ = √((j+m+1)/(2j+1)) |↑⟩|m⟩ + √((j−m)/(2j+1)) |↓⟩|m+1⟩
/// |j−½; m+½⟩ = √((j−m)/(2j+1)) |↑⟩|m⟩ − √((j+m+1)/(2j+1)) |↓⟩|m+1⟩
pub fn coupling_projectors(sys: SpinSystem) -> Result<CouplingProjectors> {
    if sys.n() == 0 {
        return Err(Error::NoLowerCoupledSpace);
    }
    Ok(build_projectors(sys))
}

/// Like [`coupling_projectors`] but returns `p_plus = I`, `p_minus = 0` for n = 0.
pub fn coupling_projectors_degenerate(sys: SpinSystem) -> CouplingProjectors {
    build_projectors(sys)
}

fn build_projectors(sys: SpinSystem) -> CouplingProjectors {
    let d = sys.dim();
    let j = sys.j();
    let norm = 2.0 * j + 1.0;
    let mut plus = CMatrix::zeros(2 * d, 2 * d);
    let mut minus = CMatrix::zeros(2 * d, 2 * d);
    let up = |k: usize| d + k;
    let down = |k: usize| k;

    let add_outer = |target: &mut CMatrix, v: &[(usize, f64)]| {
        for &(a, va) in v {
            for &(b, vb) in v {
                target[(a, b)] += c(va * vb, 0.0);
            }
        }
    };

    // Upper multiplet: m runs over −j−1..=j so that M = m+½ covers −j−½..=j+½.
    for step in 0..=(d) {
        let m = step as f64 - j - 1.0;
        let mut v = Vec::with_capacity(2);
        let a = ((j + m + 1.0) / norm).max(0.0).sqrt();
        let b = ((j - m) / norm).max(0.0).sqrt();
        if step >= 1 && a > 0.0 {
            v.push((up(step - 1), a));
        }
        if step < d && b > 0.0 {
            v.push((down(step), b));
        }
        add_outer(&mut plus, &v);
    }
    // Lower multiplet: m runs over −j..=j−1.
    for k in 0..sys.n() {
        let m = sys.m_of(k);
        let a = ((j - m) / norm).sqrt();
        let b = ((j + m + 1.0) / norm).sqrt();
        add_outer(&mut minus, &[(up(k), a), (down(k + 1), -b)]);
    }
    CouplingProjectors {
        sys,
        p_plus: OperatorMatrix::hermitian_unchecked(plus),
        p_minus: OperatorMatrix::hermitian_unchecked(minus),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ladder_small_cases() {
        let p1 = ladder_plus(SpinSystem::new(1));
        assert!(close(p1.get(1, 0).re, 1.0, 1e-15));
        let p2 = ladder_plus(SpinSystem::new(2));
        assert!(close(p2.get(1, 0).re, 2f64.sqrt(), 1e-15));
        assert!(close(p2.get(2, 1).re, 2f64.sqrt(), 1e-15));
        let p4 = ladder_plus(SpinSystem::new(4));
        assert!(close(p4.get(1, 0).re, 2.0, 1e-15));
    }

    #[test]
    fn ladder_only_on_subdiagonal() {
        let sys = SpinSystem::new(7);
        let p = ladder_plus(sys);
        for a in 0..sys.dim() {
            for b in 0..sys.dim() {
                if a != b + 1 {
                    assert_eq!(p.get(a, b), c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn spin_half_operators() {
        let sys = SpinSystem::new(1);
        let z = angular_momentum(sys, Axis::Z);
        assert_eq!(z.real_diagonal(), vec![-0.5, 0.5]);
        let x = angular_momentum(sys, Axis::X);
        assert!(close(x.get(0, 1).re, 0.5, 1e-15) && close(x.get(1, 0).re, 0.5, 1e-15));
        assert_eq!(x.get(0, 0), c(0.0, 0.0));
    }

    #[test]
    fn spin_one_y_is_imaginary_antisymmetric() {
        let y = angular_momentum(SpinSystem::new(2), Axis::Y);
        let h = 2f64.sqrt() / 2.0;
        // (J₊ − J₋)/(2i): entry (1,0) is −i·√2/2, (0,1) is +i·√2/2.
        assert!(close(y.get(1, 0).im, -h, 1e-15) && close(y.get(1, 0).re, 0.0, 1e-15));
        assert!(close(y.get(0, 1).im, h, 1e-15));
        assert!(close(y.get(2, 1).im, -h, 1e-15));
        assert!(y.is_hermitian());
    }

    #[test]
    fn casimir_values() {
        for (n, value) in [(1usize, 0.75), (2, 2.0), (10, 30.0)] {
            let cm = casimir(SpinSystem::new(n));
            let expect = OperatorMatrix::identity(n + 1).scale(value);
            assert!(cm.max_abs_diff(&expect) < 1e-10, "n={n}");
        }
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let u = exp_i_hermitian(&OperatorMatrix::zeros(4)).unwrap();
        assert!(u.max_abs_diff(&OperatorMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn exp_rejects_non_hermitian() {
        let op = OperatorMatrix::new(CMatrix::from_element(2, 2, c(1.0, 1.0))).unwrap();
        assert_eq!(exp_i_hermitian(&op).unwrap_err(), Error::NotHermitian);
    }

    #[test]
    fn spin_half_rotation_closed_form() {
        // In the (↑, ↓) basis U = [[cos, i e^{iφ} sin], [i e^{−iφ} sin, cos]] with
        // half-angle arguments and e^{−iφ}|θ| = θ₁ + iθ₂; the ascending basis swaps the corners.
        let sys = SpinSystem::new(1);
        for &(t1, t2) in &[(0.3, -1.1), (2.0, 0.5), (-0.7, 0.0), (1.2, 2.5)] {
            let u = rotation(sys, [t1, t2, 0.0]);
            let norm: f64 = (t1 * t1 + t2 * t2).sqrt();
            let phi = -(t2).atan2(t1);
            let (s, co) = (norm / 2.0).sin_cos();
            let e = |x: f64| C64::from_polar(1.0, x);
            let expected = CMatrix::from_row_slice(
                2,
                2,
                &[c(co, 0.0), c(0.0, 1.0) * e(-phi) * s, c(0.0, 1.0) * e(phi) * s, c(co, 0.0)],
            );
            let diff = (u.entries() - expected).iter().fold(0.0f64, |m, z| m.max(z.norm()));
            assert!(diff < 1e-12, "theta=({t1},{t2}) diff={diff}");
        }
    }

    #[test]
    fn projector_n0_is_error() {
        assert_eq!(coupling_projectors(SpinSystem::new(0)).unwrap_err(), Error::NoLowerCoupledSpace);
        let deg = coupling_projectors_degenerate(SpinSystem::new(0));
        assert!(deg.p_plus.max_abs_diff(&OperatorMatrix::identity(2)) < 1e-15);
        assert!(deg.p_minus.max_abs() == 0.0);
    }

    #[test]
    fn singlet_triplet_for_two_halves() {
        let p = coupling_projectors(SpinSystem::new(1)).unwrap();
        assert!(close(p.p_plus.trace().re, 3.0, 1e-12));
        assert!(close(p.p_minus.trace().re, 1.0, 1e-12));
        // singlet (|↑↓⟩ − |↓↑⟩)/√2 in product indices: up⊗down = 2, down⊗up = 1.
        let s = 0.5;
        assert!(close(p.p_minus.get(2, 2).re, s, 1e-12));
        assert!(close(p.p_minus.get(1, 2).re, -s, 1e-12));
    }

    #[test]
    fn stretched_state_is_in_upper_space() {
        let p = coupling_projectors(SpinSystem::new(2)).unwrap();
        let idx = p.product_index(true, 2);
        for a in 0..p.dim() {
            let expect = if a == idx { 1.0 } else { 0.0 };
            assert!(close(p.p_plus.get(a, idx).re, expect, 1e-12));
        }
    }
}
