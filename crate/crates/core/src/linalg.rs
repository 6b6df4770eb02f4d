//! Dense complex operators and the small real-matrix helpers used by the bounds.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type RMatrix = DMatrix<f64>;

/// Entrywise tolerance for the Hermitian flag.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Condition-number guard for Fisher-type matrices.
pub const MAX_CONDITION: f64 = 1e12;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex square matrix in the |j;m⟩ basis (m ascending).
///
/// The Hermitian flag is only ever set after the entries were checked, or
/// by constructions that are Hermitian by definition (sums of Hermitian
/// operators, real scalings, unitary conjugation).
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    entries: CMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        Ok(Self {
            entries,
            hermitian: false,
        })
    }

    /// Wraps `entries` and sets the Hermitian flag, failing if the entries are
    /// not Hermitian within [`HERMITIAN_TOL`] (relative to the largest entry).
    pub fn hermitian(entries: CMatrix) -> Result<Self> {
        let op = Self::new(entries)?;
        op.into_hermitian()
    }

    pub(crate) fn hermitian_unchecked(entries: CMatrix) -> Self {
        debug_assert_eq!(entries.nrows(), entries.ncols());
        Self {
            entries,
            hermitian: true,
        }
    }

    pub fn into_hermitian(mut self) -> Result<Self> {
        let scale = self.max_abs().max(1.0);
        if self.hermitian_residual() > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian);
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn identity(dim: usize) -> Self {
        Self::hermitian_unchecked(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::hermitian_unchecked(CMatrix::zeros(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| c(x, 0.0)));
        Self::hermitian_unchecked(CMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            entries: &self.entries * c(factor, 0.0),
            hermitian: self.hermitian,
        }
    }

    pub fn scale_complex(&self, factor: C64) -> Self {
        Self {
            entries: &self.entries * factor,
            hermitian: self.hermitian && factor.im == 0.0,
        }
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        Self {
            entries: &self.entries * &other.entries - &other.entries * &self.entries,
            hermitian: false,
        }
    }

    /// Jordan product `½(self·other + other·self)`.
    pub fn jordan(&self, other: &Self) -> Self {
        let sum = &self.entries * &other.entries + &other.entries * &self.entries;
        Self {
            entries: sum * c(0.5, 0.0),
            hermitian: self.hermitian && other.hermitian,
        }
    }

    /// `U · self · U†`.
    pub fn conjugate_by(&self, unitary: &Self) -> Self {
        Self {
            entries: &unitary.entries * &self.entries * unitary.entries.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self {
            entries: self.entries.kronecker(&other.entries),
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.entries - &other.entries)
            .iter()
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermitian_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in a..n {
                let d = self.entries[(a, b)] - self.entries[(b, a)].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_exactly_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|a| (0..n).all(|b| a == b || self.entries[(a, b)] == C64::new(0.0, 0.0)))
    }

    pub fn real_diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.entries[(k, k)].re).collect()
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix {
            entries: &self.entries + &rhs.entries,
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix {
            entries: &self.entries - &rhs.entries,
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix {
            entries: &self.entries * &rhs.entries,
            hermitian: false,
        }
    }
}

/// Eigendecomposition of a Hermitian operator.
///
/// `vectors == None` means the eigenbasis is the computational basis, which
/// is the case for exactly diagonal input. `exact` records whether the
/// eigenvalues are known exactly (diagonal input or a unitary orbit of one)
/// rather than produced by an iterative eigensolver.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Option<CMatrix>,
    pub exact: bool,
}

impl Spectrum {
    pub fn of(op: &OperatorMatrix) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(Error::NotHermitian);
        }
        if op.is_exactly_diagonal() {
            return Ok(Self {
                values: op.real_diagonal(),
                vectors: None,
                exact: true,
            });
        }
        let eig = nalgebra::SymmetricEigen::new(op.entries().clone());
        Ok(Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: Some(eig.eigenvectors),
            exact: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V† X V`.
    pub fn to_eigenbasis(&self, x: &CMatrix) -> CMatrix {
        match &self.vectors {
            None => x.clone(),
            Some(v) => v.adjoint() * x * v,
        }
    }

    /// `V X V†`.
    pub fn from_eigenbasis(&self, x: &CMatrix) -> CMatrix {
        match &self.vectors {
            None => x.clone(),
            Some(v) => v * x * v.adjoint(),
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, &p| m.max(p))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m: f64, &p| m.min(p))
    }

    /// Eigenvalues at or below this are treated as kernel.
    ///
    /// Exact spectra use 0; eigensolver spectra use `1e-14·max`.
    pub fn support_threshold(&self) -> f64 {
        if self.exact {
            0.0
        } else {
            1e-14 * self.max_value()
        }
    }

    /// Eigenvalues clamped to zero on the kernel.
    pub fn clamped_values(&self) -> Vec<f64> {
        let thr = self.support_threshold();
        self.values
            .iter()
            .map(|&p| if p <= thr { 0.0 } else { p })
            .collect()
    }
}

/// Inverse of a real symmetric matrix with a condition-number guard.
pub fn symmetric_inverse(m: &RMatrix) -> Result<RMatrix> {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &x| a.min(x.abs()));
    if max == 0.0 || !(min > 0.0) || max / min > MAX_CONDITION {
        let cond = if min > 0.0 { max / min } else { f64::INFINITY };
        return Err(Error::SingularFisher(cond));
    }
    let inv_diag = RMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x));
    Ok(&eig.eigenvectors * inv_diag * eig.eigenvectors.transpose())
}

/// Inverse of a complex Hermitian matrix with a condition-number guard.
pub fn hermitian_inverse(m: &CMatrix) -> Result<CMatrix> {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &x| a.min(x.abs()));
    if max == 0.0 || !(min > 0.0) || max / min > MAX_CONDITION {
        let cond = if min > 0.0 { max / min } else { f64::INFINITY };
        return Err(Error::SingularFisher(cond));
    }
    let inv_diag = CMatrix::from_diagonal(&eig.eigenvalues.map(|x| c(1.0 / x, 0.0)));
    Ok(&eig.eigenvectors * inv_diag * eig.eigenvectors.adjoint())
}

/// Square root of a real symmetric PSD matrix.
pub fn psd_sqrt(m: &RMatrix) -> Result<RMatrix> {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
    if eig.eigenvalues.iter().any(|&x| x < -1e-12 * scale) {
        return Err(Error::Domain("weight matrix is not positive semidefinite".into()));
    }
    let root = RMatrix::from_diagonal(&eig.eigenvalues.map(|x| x.max(0.0).sqrt()));
    Ok(&eig.eigenvectors * root * eig.eigenvectors.transpose())
}

/// Sum of singular values.
pub fn trace_norm(m: &RMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.sum()
}

pub fn real_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.re)
}

pub fn imag_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.im)
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| c(x, 0.0))
}
