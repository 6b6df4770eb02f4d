//! Local Cramér-Rao-type bounds: SLD and RLD solvers, Fisher matrices, the
//! D-superoperator, and the SLD / RLD / Holevo-Nagaoka bound values.
//!
//! All solvers work in the eigenbasis of ρ. For a state whose eigenvalues are
//! known exactly (diagonal probes and their unitary orbits) the kernel is the
//! set of exactly-zero eigenvalues; for eigensolver spectra the cut is
//! `1e-14·max`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitian_inverse, imag_part, psd_sqrt, real_part, symmetric_inverse, to_complex,
    trace_norm, CMatrix, OperatorMatrix, RMatrix, I,
};
use crate::spin::{angular_momentum, Axis};
use crate::states::{DensityState, WeightDistribution};

/// Minimum eigenvalue for the RLD on an eigensolver-derived spectrum.
pub const RLD_RANK_TOL: f64 = 1e-12;
/// Threshold for declaring a model D-invariant.
pub const D_INVARIANCE_TOL: f64 = 1e-8;
/// Tolerance on `Tr X*_j D_k = δ_jk`.
pub const X_STAR_TOL: f64 = 1e-9;
/// Derivatives are traceless within this.
pub const TRACELESS_TOL: f64 = 1e-10;

/// A state ρ together with its parameter derivatives D_j = ∂ρ_θ/∂θ^j.
#[derive(Clone, Debug)]
pub struct ModelPoint {
    rho: DensityState,
    derivs: Vec<OperatorMatrix>,
}

impl ModelPoint {
    pub fn new(rho: DensityState, derivs: Vec<OperatorMatrix>) -> Result<Self> {
        if derivs.is_empty() {
            return Err(Error::Domain("a model needs at least one parameter".into()));
        }
        for d in &derivs {
            if d.dim() != rho.sys().dim() {
                return Err(Error::DimensionMismatch {
                    expected: rho.sys().dim(),
                    got: d.dim(),
                });
            }
            if !d.is_hermitian() {
                return Err(Error::NotHermitian);
            }
            if d.trace().norm() > TRACELESS_TOL * d.max_abs().max(1.0) {
                return Err(Error::Domain("derivative is not traceless".into()));
            }
        }
        Ok(Self { rho, derivs })
    }

    pub fn rho(&self) -> &DensityState {
        &self.rho
    }

    pub fn derivs(&self) -> &[OperatorMatrix] {
        &self.derivs
    }

    pub fn n_params(&self) -> usize {
        self.derivs.len()
    }
}

/// D₁ = i[ρ, J₁], D₂ = i[ρ, J₂]: the derivatives of U_θ ρ U_θ† at θ = 0
/// (up to an overall sign that no bound depends on).
pub fn unitary_model_derivs(rho: &DensityState) -> ModelPoint {
    let sys = rho.sys();
    let derivs = [Axis::X, Axis::Y]
        .iter()
        .map(|&axis| {
            let j = angular_momentum(sys, axis);
            let comm = rho.matrix().commutator(&j);
            hermitize(comm.scale_complex(I).into_entries())
        })
        .collect();
    ModelPoint::new(rho.clone(), derivs).expect("commutator derivatives are Hermitian and traceless")
}

fn hermitize(m: CMatrix) -> OperatorMatrix {
    let sym = (&m + m.adjoint()) * c(0.5, 0.0);
    OperatorMatrix::hermitian(sym).expect("symmetrized matrix is Hermitian")
}

/// Solves D = ½(Lρ + ρL) for Hermitian L, with L = 0 on the kernel-kernel block.
pub fn sld_solve(rho: &DensityState, d: &OperatorMatrix) -> Result<OperatorMatrix> {
    if !d.is_hermitian() {
        return Err(Error::NotHermitian);
    }
    let spec = rho.spectrum();
    let p = spec.clamped_values();
    let dp = spec.to_eigenbasis(d.entries());
    let kernel_tol = 1e-9 * d.max_abs().max(1.0);
    let dim = p.len();
    let mut l = CMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            let s = p[a] + p[b];
            if s > 0.0 {
                l[(a, b)] = dp[(a, b)] * (2.0 / s);
            } else if dp[(a, b)].norm() > kernel_tol {
                return Err(Error::DerivativeLeavesSupport(dp[(a, b)].norm()));
            }
        }
    }
    Ok(hermitize(spec.from_eigenbasis(&l)))
}

/// Solves D = ρL̃; requires ρ to be full rank.
pub fn rld_solve(rho: &DensityState, d: &OperatorMatrix) -> Result<OperatorMatrix> {
    let spec = rho.spectrum();
    let min = spec.min_value();
    let full_rank = if spec.exact { min > 0.0 } else { min > RLD_RANK_TOL };
    if !full_rank {
        return Err(Error::SingularState(min));
    }
    let dp = spec.to_eigenbasis(d.entries());
    let dim = spec.dim();
    let mut l = CMatrix::zeros(dim, dim);
    for a in 0..dim {
        let inv = 1.0 / spec.values[a];
        for b in 0..dim {
            l[(a, b)] = dp[(a, b)] * inv;
        }
    }
    OperatorMatrix::new(spec.from_eigenbasis(&l))
}

/// SLDs for every parameter of the model.
pub fn slds(model: &ModelPoint) -> Result<Vec<OperatorMatrix>> {
    model.derivs().iter().map(|d| sld_solve(model.rho(), d)).collect()
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> crate::linalg::C64 {
    let n = a.nrows();
    let mut acc = c(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// F_ij = ½ Tr L_i (L_j ρ + ρ L_j) for the given SLDs.
pub fn sld_fisher_with(rho: &DensityState, ls: &[OperatorMatrix]) -> RMatrix {
    let d = ls.len();
    let r = rho.matrix().entries();
    let anti: Vec<CMatrix> = ls
        .iter()
        .map(|l| l.entries() * r + r * l.entries())
        .collect();
    let mut f = RMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = 0.5 * trace_product(ls[i].entries(), &anti[j]).re;
            f[(i, j)] = v;
            f[(j, i)] = v;
        }
    }
    f
}

/// SLD Fisher information matrix of the model.
pub fn sld_fisher(model: &ModelPoint) -> Result<RMatrix> {
    Ok(sld_fisher_with(model.rho(), &slds(model)?))
}

/// F̃_ij = Tr L̃_i ρ L̃_j.
pub fn rld_fisher(model: &ModelPoint) -> Result<CMatrix> {
    let rlds: Vec<OperatorMatrix> = model
        .derivs()
        .iter()
        .map(|d| rld_solve(model.rho(), d))
        .collect::<Result<_>>()?;
    let d = rlds.len();
    let mut f = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            // ρ L̃_j = D_j
            f[(i, j)] = trace_product(rlds[i].entries(), model.derivs()[j].entries());
        }
    }
    Ok(f)
}

/// The Hermitian operator D(X) with ρ∘D(X) = i[X, ρ], where ρ∘Y = ½(ρY + Yρ).
///
/// In the eigenbasis of ρ: D(X)_ab = −2i (p_a − p_b)/(p_a + p_b) X_ab, and 0
/// on the kernel-kernel block.
pub fn d_superoperator(rho: &DensityState, x: &OperatorMatrix) -> OperatorMatrix {
    let spec = rho.spectrum();
    let p = spec.clamped_values();
    let xp = spec.to_eigenbasis(x.entries());
    let dim = p.len();
    let mut y = CMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            let s = p[a] + p[b];
            if s > 0.0 {
                y[(a, b)] = xp[(a, b)] * c(0.0, -2.0 * (p[a] - p[b]) / s);
            }
        }
    }
    hermitize(spec.from_eigenbasis(&y))
}

/// SLD inner product ⟨A, B⟩ = ½ Re Tr ρ(AB + BA).
fn sld_inner(rho: &DensityState, a: &OperatorMatrix, b: &OperatorMatrix) -> f64 {
    let r = rho.matrix().entries();
    let rb = r * b.entries();
    // Tr ρAB + Tr ρBA = Tr A(Bρ) + Tr A(ρB)
    let br = b.entries() * r;
    0.5 * (trace_product(a.entries(), &br).re + trace_product(a.entries(), &rb).re)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DInvariance {
    pub holds: bool,
    /// Largest relative SLD-norm distance of D(L_j) from span{L_k}.
    pub residual: f64,
}

/// Checks whether every D(L_j) lies in the real span of the SLDs.
pub fn d_invariance_check(model: &ModelPoint, ls: &[OperatorMatrix]) -> Result<DInvariance> {
    let rho = model.rho();
    let f = sld_fisher_with(rho, ls);
    let f_inv = symmetric_inverse(&f)?;
    let mut worst: f64 = 0.0;
    for l in ls {
        let y = d_superoperator(rho, l);
        let norm_y = sld_inner(rho, &y, &y);
        if norm_y <= 1e-300 {
            continue;
        }
        let b: Vec<f64> = ls.iter().map(|lk| sld_inner(rho, lk, &y)).collect();
        let mut resid = y.clone();
        for (k, lk) in ls.iter().enumerate() {
            let coef: f64 = (0..ls.len()).map(|m| f_inv[(k, m)] * b[m]).sum();
            resid = &resid - &lk.scale(coef);
        }
        let rel = (sld_inner(rho, &resid, &resid).max(0.0) / norm_y).sqrt();
        worst = worst.max(rel);
    }
    Ok(DInvariance {
        holds: worst < D_INVARIANCE_TOL,
        residual: worst,
    })
}

/// D_jk = Tr D(L_j) D_k.
pub fn d_matrix(model: &ModelPoint, ls: &[OperatorMatrix]) -> RMatrix {
    let d = ls.len();
    let dl: Vec<OperatorMatrix> = ls.iter().map(|l| d_superoperator(model.rho(), l)).collect();
    RMatrix::from_fn(d, d, |j, k| trace_product(dl[j].entries(), model.derivs()[k].entries()).re)
}

/// C^S = Tr G F⁻¹.
pub fn sld_bound(f: &RMatrix, g: &RMatrix) -> Result<f64> {
    check_weight(g, f.nrows())?;
    let inv = symmetric_inverse(f)?;
    Ok((g * inv).trace())
}

/// C^R = Tr Re √G F̃⁻¹ √G + Tr |Im √G F̃⁻¹ √G|.
pub fn rld_bound(f_tilde: &CMatrix, g: &RMatrix) -> Result<f64> {
    check_weight(g, f_tilde.nrows())?;
    let inv = hermitian_inverse(f_tilde)?;
    let sq = to_complex(&psd_sqrt(g)?);
    let m = &sq * inv * &sq;
    Ok(real_part(&m).trace() + trace_norm(&imag_part(&m)))
}

/// RLD bound of a D-invariant model: Tr G F⁻¹ + ½ Tr |√G F⁻¹ D F⁻¹ √G|.
pub fn rld_bound_d_invariant(f: &RMatrix, dmat: &RMatrix, g: &RMatrix) -> Result<f64> {
    check_weight(g, f.nrows())?;
    let inv = symmetric_inverse(f)?;
    let sq = psd_sqrt(g)?;
    let core = &sq * &inv * dmat * &inv * &sq;
    Ok((g * &inv).trace() + 0.5 * trace_norm(&core))
}

/// X*_k = Σ_j (F⁻¹)_kj L_j.
pub fn x_star(f: &RMatrix, ls: &[OperatorMatrix]) -> Result<Vec<OperatorMatrix>> {
    let inv = symmetric_inverse(f)?;
    Ok((0..ls.len())
        .map(|k| {
            ls.iter()
                .enumerate()
                .fold(OperatorMatrix::zeros(ls[0].dim()), |acc, (j, l)| {
                    &acc + &l.scale(inv[(k, j)])
                })
        })
        .collect())
}

/// Z_jk(X) = Tr ρ X_j X_k.
pub fn z_matrix(rho: &DensityState, xs: &[OperatorMatrix]) -> CMatrix {
    let r = rho.matrix().entries();
    let rx: Vec<CMatrix> = xs.iter().map(|x| r * x.entries()).collect();
    let d = xs.len();
    CMatrix::from_fn(d, d, |j, k| trace_product(&rx[j], xs[k].entries()))
}

/// Largest deviation of Tr X_j D_k from δ_jk.
pub fn x_constraint_residual(model: &ModelPoint, xs: &[OperatorMatrix]) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, x) in xs.iter().enumerate() {
        for (k, dk) in model.derivs().iter().enumerate() {
            let t = trace_product(x.entries(), dk.entries());
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((t - c(target, 0.0)).norm());
        }
    }
    worst
}

/// Holevo-Nagaoka objective evaluated at X*:
/// Tr G Re Z(X*) + Tr |√G Im Z(X*) √G|.
pub fn hn_upper_from_x_star(
    model: &ModelPoint,
    f: &RMatrix,
    ls: &[OperatorMatrix],
    g: &RMatrix,
) -> Result<f64> {
    check_weight(g, f.nrows())?;
    let xs = x_star(f, ls)?;
    let resid = x_constraint_residual(model, &xs);
    let scale = symmetric_inverse(f)?.abs().max().max(1.0);
    if resid > X_STAR_TOL * scale {
        return Err(Error::ConstraintViolated(resid));
    }
    let z = z_matrix(model.rho(), &xs);
    let sq = psd_sqrt(g)?;
    Ok((g * real_part(&z)).trace() + trace_norm(&(&sq * imag_part(&z) * &sq)))
}

/// Closed form of the SLD Fisher information F₁₁ = F₂₂ of the SU(2) orbit
/// model on a diagonal state:
///
/// Σ_{m=−j}^{j−1} (p_{m+1} − p_m)² / (p_{m+1} + p_m) · (j−m)(j+m+1).
///
/// Terms with p_{m+1} + p_m = 0 contribute nothing.
pub fn unitary_fisher_closed_form(w: &WeightDistribution) -> f64 {
    let sys = w.sys();
    let j = sys.j();
    (0..sys.n())
        .map(|k| {
            let (lo, hi) = (w.at(k), w.at(k + 1));
            let s = lo + hi;
            if s > 0.0 {
                let m = sys.m_of(k);
                (hi - lo).powi(2) / s * (j - m) * (j + m + 1.0)
            } else {
                0.0
            }
        })
        .sum()
}

fn check_weight(g: &RMatrix, d: usize) -> Result<()> {
    if g.nrows() != d || g.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: g.nrows(),
        });
    }
    if (g - g.transpose()).abs().max() > 1e-12 * g.abs().max().max(1.0) {
        return Err(Error::Domain("weight matrix is not symmetric".into()));
    }
    Ok(())
}

fn to_rows(m: &RMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<RMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Domain("matrix must be square".into()));
    }
    Ok(RMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Fisher-type matrices of one model point. Complex matrices are stored as
/// separate real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrices {
    pub sld_f: Vec<Vec<f64>>,
    pub rld_f_re: Option<Vec<Vec<f64>>>,
    pub rld_f_im: Option<Vec<Vec<f64>>>,
    /// Largest |F̃_ij − conj(F̃_ji)|.
    pub rld_hermitian_residual: Option<f64>,
    pub d_matrix: Vec<Vec<f64>>,
}

/// Local bound values at one model point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub n_params: usize,
    pub sld_bound: f64,
    pub sld_upper: f64,
    pub rld_bound: Option<f64>,
    /// Reason code when the RLD bound is absent.
    pub rld_reason: Option<String>,
    pub hn_d_invariant: Option<f64>,
    pub hn_upper_from_x_star: f64,
    pub d_invariant: bool,
    pub d_invariance_residual: f64,
    pub weight: Vec<Vec<f64>>,
    pub fisher: FisherMatrices,
}

impl BoundsReport {
    /// Computes every local quantity. The SLD part must succeed; the RLD part
    /// is optional and records a reason code when it fails.
    pub fn compute(model: &ModelPoint, g: &RMatrix) -> Result<Self> {
        let ls = slds(model)?;
        let f = sld_fisher_with(model.rho(), &ls);
        let sld = sld_bound(&f, g)?;
        let d = model.n_params();

        let (rld_bound_value, rld_reason, rld_f) = match rld_fisher(model) {
            Ok(ft) => match rld_bound(&ft, g) {
                Ok(v) => (Some(v), None, Some(ft)),
                Err(e) => (None, Some(e.code().to_string()), Some(ft)),
            },
            Err(e) => (None, Some(e.code().to_string()), None),
        };

        let inv = d_invariance_check(model, &ls)?;
        let dm = d_matrix(model, &ls);
        let hn_d_invariant = if inv.holds {
            Some(rld_bound_d_invariant(&f, &dm, g)?)
        } else {
            None
        };
        let hn_upper = hn_upper_from_x_star(model, &f, &ls, g)?;

        let rld_hermitian_residual = rld_f.as_ref().map(|ft| {
            let mut worst: f64 = 0.0;
            for i in 0..d {
                for j in 0..d {
                    worst = worst.max((ft[(i, j)] - ft[(j, i)].conj()).norm());
                }
            }
            worst
        });

        Ok(Self {
            n_params: d,
            sld_bound: sld,
            sld_upper: d as f64 * sld,
            rld_bound: rld_bound_value,
            rld_reason,
            hn_d_invariant,
            hn_upper_from_x_star: hn_upper,
            d_invariant: inv.holds,
            d_invariance_residual: inv.residual,
            weight: to_rows(g),
            fisher: FisherMatrices {
                sld_f: to_rows(&f),
                rld_f_re: rld_f.as_ref().map(|m| to_rows(&real_part(m))),
                rld_f_im: rld_f.as_ref().map(|m| to_rows(&imag_part(m))),
                rld_hermitian_residual,
                d_matrix: to_rows(&dm),
            },
        })
    }

    /// Violations of the ordering chain C^S ≤ C^R ≤ 2C^S (D-invariant models)
    /// and C^S ≤ HN(X*) ≤ 2C^S, relative tolerance 1e-8.
    pub fn ordering_violations(&self) -> Vec<String> {
        let tol = 1e-8 * self.sld_bound.abs().max(f64::MIN_POSITIVE);
        let mut out = Vec::new();
        let s = self.sld_bound;
        if let (true, Some(r)) = (self.d_invariant, self.rld_bound) {
            if r < s - tol || r > 2.0 * s + tol {
                out.push(format!("rld_bound {r} outside [{s}, {}]", 2.0 * s));
            }
        }
        let h = self.hn_upper_from_x_star;
        if h < s - tol || h > 2.0 * s + tol {
            out.push(format!("hn_upper_from_x_star {h} outside [{s}, {}]", 2.0 * s));
        }
        out
    }
}
