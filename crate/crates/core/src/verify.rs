//! Invariant and oracle suite behind `spinj verify`.
//!
//! Each check reduces to a worst-case metric compared against a tolerance.
//! `max_n` caps the spin sizes visited.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{
    binomial_direct_mse, binomial_estimator_moments, geometric_expectation_param, geometric_fisher_natural,
    GeometricClassicalModel,
};
use crate::error::Result;
use crate::global::{
    bfy_holds, bfy_sides, binomial_r_closed, delta_r_closed, geometric_eta_asymptotic, geometric_eta_exact,
    geometric_r_closed, optimal_r,
};
use crate::linalg::{c, CMatrix, OperatorMatrix, RMatrix, I};
use crate::local::{
    d_invariance_check, d_matrix, d_superoperator, hn_upper_from_x_star, rld_bound, rld_bound_d_invariant,
    rld_fisher, sld_bound, sld_fisher_with, slds, unitary_fisher_closed_form, unitary_model_derivs,
    x_constraint_residual, x_star, z_matrix, ModelPoint,
};
use crate::sim::{average_fidelity, coherent_state, sample_outcome, uniform_proposal, SimConfig};
use crate::spin::{
    angular_momentum, casimir, coupling_projectors, ladder_minus, ladder_plus, Axis, SpinSystem,
};
use crate::states::{
    binomial_weights, delta_weights, diagonal_state, evolved_state, fidelity_point, geometric_weights,
    orbit_unitary, DensityState, ParamPoint, WeightDistribution,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub max_n: usize,
    /// Perturbs one oracle comparison so the suite must fail.
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            max_n: 30,
            inject_fault: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub area: String,
    pub passed: bool,
    pub metric: Option<f64>,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub max_n: usize,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn passed_count(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }
}

type CheckFn = fn(&VerifyConfig) -> Result<f64>;

struct Check {
    name: &'static str,
    area: &'static str,
    tol: f64,
    run: CheckFn,
}

/// Spin sizes 1..=max_n.
fn all_n(cfg: &VerifyConfig) -> Vec<usize> {
    (1..=cfg.max_n.max(1)).collect()
}

/// A sparse selection of sizes up to `min(max_n, cap)`, always including the cap.
fn some_n(cfg: &VerifyConfig, cap: usize) -> Vec<usize> {
    let top = cfg.max_n.min(cap).max(1);
    let mut v: Vec<usize> = [1, 2, 3, 4, 5, 8, 13, 21, 30, 50]
        .into_iter()
        .filter(|&n| n <= top)
        .collect();
    if v.last() != Some(&top) {
        v.push(top);
    }
    v
}

fn thetas() -> Vec<ParamPoint> {
    vec![
        ParamPoint::new(0.3, -1.1).unwrap(),
        ParamPoint::new(2.0, 0.5).unwrap(),
        ParamPoint::new(-0.7, 0.0).unwrap(),
        ParamPoint::from_polar(PI, 1.3).unwrap(),
    ]
}

/// Families evaluated by the state-level checks.
fn family_states(n: usize) -> Vec<WeightDistribution> {
    let sys = SpinSystem::new(n);
    let mut out = vec![
        binomial_weights(sys, 0.75).unwrap(),
        binomial_weights(sys, 0.3).unwrap(),
        geometric_weights(sys, 2.0).unwrap(),
        geometric_weights(sys, 0.5).unwrap(),
    ];
    let j = sys.j();
    out.push(delta_weights(sys, j).unwrap());
    if n >= 2 {
        out.push(delta_weights(sys, j - 1.0).unwrap());
    }
    out
}

fn full_rank_states(n: usize) -> Vec<WeightDistribution> {
    let sys = SpinSystem::new(n);
    vec![
        binomial_weights(sys, 0.6).unwrap(),
        geometric_weights(sys, 2.0).unwrap(),
        geometric_weights(sys, 1.5).unwrap(),
    ]
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> WeightDistribution {
    let raw: Vec<f64> = (0..=n).map(|_| rng.random::<f64>() + 1e-3).collect();
    WeightDistribution::custom_normalized(SpinSystem::new(n), raw).unwrap().0
}

fn max_over<T>(items: impl IntoIterator<Item = T>, mut f: impl FnMut(T) -> Result<f64>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in items {
        worst = worst.max(f(x)?);
    }
    Ok(worst)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

// ----- spin-core -------------------------------------------------------------

fn commutator_check(cfg: &VerifyConfig, a: Axis, b: Axis, cz: Axis) -> Result<f64> {
    max_over(all_n(cfg), |n| {
        let sys = SpinSystem::new(n);
        let (ja, jb, jc) = (angular_momentum(sys, a), angular_momentum(sys, b), angular_momentum(sys, cz));
        Ok(ja.commutator(&jb).max_abs_diff(&jc.scale_complex(I)))
    })
}

fn chk_comm_12(cfg: &VerifyConfig) -> Result<f64> {
    commutator_check(cfg, Axis::X, Axis::Y, Axis::Z)
}

fn chk_comm_23(cfg: &VerifyConfig) -> Result<f64> {
    commutator_check(cfg, Axis::Y, Axis::Z, Axis::X)
}

fn chk_comm_31(cfg: &VerifyConfig) -> Result<f64> {
    commutator_check(cfg, Axis::Z, Axis::X, Axis::Y)
}

fn chk_casimir(cfg: &VerifyConfig) -> Result<f64> {
    max_over(all_n(cfg), |n| {
        let sys = SpinSystem::new(n);
        let j = sys.j();
        let target = OperatorMatrix::identity(sys.dim()).scale(j * (j + 1.0));
        Ok(casimir(sys).max_abs_diff(&target) / (j * (j + 1.0)).max(1.0))
    })
}

fn chk_ladder_adjoint(cfg: &VerifyConfig) -> Result<f64> {
    max_over(all_n(cfg), |n| {
        let sys = SpinSystem::new(n);
        Ok(ladder_plus(sys).adjoint().max_abs_diff(&ladder_minus(sys)))
    })
}

fn chk_generators_hermitian(cfg: &VerifyConfig) -> Result<f64> {
    max_over(all_n(cfg), |n| {
        let sys = SpinSystem::new(n);
        max_over([Axis::X, Axis::Y, Axis::Z], |a| Ok(angular_momentum(sys, a).hermitian_residual()))
    })
}

fn chk_rotation_unitary(cfg: &VerifyConfig) -> Result<f64> {
    max_over(all_n(cfg), |n| {
        let sys = SpinSystem::new(n);
        max_over(thetas(), |t| {
            let u = orbit_unitary(sys, &t);
            Ok((&u * &u.adjoint()).max_abs_diff(&OperatorMatrix::identity(sys.dim())))
        })
    })
}

fn chk_coherent_spin_length(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 30), |n| {
        let sys = SpinSystem::new(n);
        let js: Vec<OperatorMatrix> = [Axis::X, Axis::Y, Axis::Z].iter().map(|&a| angular_momentum(sys, a)).collect();
        max_over(thetas(), |t| {
            let psi = coherent_state(sys, &t);
            let len2: f64 = js
                .iter()
                .map(|j| psi.dotc(&(j.entries() * &psi)).re.powi(2))
                .sum();
            Ok((len2.sqrt() - sys.j()).abs())
        })
    })
}

fn chk_coherent_vs_expm(cfg: &VerifyConfig) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let pts: Vec<ParamPoint> = (0..100).map(|_| uniform_proposal(&mut rng)).collect();
    max_over(some_n(cfg, 12), |n| {
        let sys = SpinSystem::new(n);
        max_over(pts.iter(), |t| {
            let col = orbit_unitary(sys, t).entries().column(n).into_owned();
            Ok((col - coherent_state(sys, t)).iter().fold(0.0f64, |m, z| m.max(z.norm())))
        })
    })
}

fn projector_check(cfg: &VerifyConfig, f: fn(&crate::spin::CouplingProjectors) -> f64) -> Result<f64> {
    max_over(all_n(cfg), |n| Ok(f(&coupling_projectors(SpinSystem::new(n))?)))
}

fn chk_proj_idempotent(cfg: &VerifyConfig) -> Result<f64> {
    projector_check(cfg, |p| {
        (&p.p_plus * &p.p_plus)
            .max_abs_diff(&p.p_plus)
            .max((&p.p_minus * &p.p_minus).max_abs_diff(&p.p_minus))
    })
}

fn chk_proj_orthogonal(cfg: &VerifyConfig) -> Result<f64> {
    projector_check(cfg, |p| (&p.p_plus * &p.p_minus).max_abs())
}

fn chk_proj_complete(cfg: &VerifyConfig) -> Result<f64> {
    projector_check(cfg, |p| (&p.p_plus + &p.p_minus).max_abs_diff(&OperatorMatrix::identity(p.dim())))
}

fn chk_proj_ranks(cfg: &VerifyConfig) -> Result<f64> {
    projector_check(cfg, |p| {
        let n = p.sys.n() as f64;
        (p.p_plus.trace().re - (n + 2.0)).abs().max((p.p_minus.trace().re - n).abs())
    })
}

fn total_spin(sys: SpinSystem) -> [OperatorMatrix; 3] {
    let half = SpinSystem::new(1);
    [Axis::X, Axis::Y, Axis::Z].map(|a| {
        let s = angular_momentum(half, a).kron(&OperatorMatrix::identity(sys.dim()));
        let j = OperatorMatrix::identity(2).kron(&angular_momentum(sys, a));
        &s + &j
    })
}

fn chk_proj_casimir(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 30), |n| {
        let sys = SpinSystem::new(n);
        let p = coupling_projectors(sys)?;
        let t = total_spin(sys);
        let c2 = t.iter().fold(OperatorMatrix::zeros(p.dim()), |acc, x| &acc + &(x * x));
        let j = sys.j();
        let up = (j + 0.5) * (j + 1.5);
        let lo = (j - 0.5) * (j + 0.5);
        Ok((&c2 * &p.p_plus)
            .max_abs_diff(&p.p_plus.scale(up))
            .max((&c2 * &p.p_minus).max_abs_diff(&p.p_minus.scale(lo)))
            / up)
    })
}

fn chk_proj_commutant(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 30), |n| {
        let sys = SpinSystem::new(n);
        let p = coupling_projectors(sys)?;
        max_over(thetas(), |t| {
            let u = orbit_unitary(SpinSystem::new(1), &t).kron(&orbit_unitary(sys, &t));
            Ok(p.p_plus.commutator(&u).max_abs().max(p.p_minus.commutator(&u).max_abs()))
        })
    })
}

// ----- state-families --------------------------------------------------------

fn chk_weights_normalized(cfg: &VerifyConfig) -> Result<f64> {
    max_over(all_n(cfg), |n| {
        max_over(family_states(n), |w| Ok((w.weights().iter().sum::<f64>() - 1.0).abs()))
    })
}

fn chk_weight_ratios(cfg: &VerifyConfig) -> Result<f64> {
    max_over(all_n(cfg), |n| {
        let sys = SpinSystem::new(n);
        let b = binomial_weights(sys, 0.7)?;
        let g = geometric_weights(sys, 3.0)?;
        max_over(0..n, |k| {
            let binom_step = (n - k) as f64 / (k + 1) as f64;
            Ok(rel(b.at(k + 1) / b.at(k), binom_step * 0.7 / 0.3).max(rel(g.at(k + 1) / g.at(k), 3.0)))
        })
    })
}

fn chk_state_trace_psd(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 30), |n| {
        max_over(family_states(n), |w| {
            max_over(thetas(), |t| {
                let rho = evolved_state(&diagonal_state(&w), &t);
                let fresh = DensityState::new(rho.sys(), rho.matrix().clone())?;
                let min = fresh.sorted_eigenvalues()[0];
                Ok((rho.matrix().trace() - c(1.0, 0.0)).norm().max((-min).max(0.0)))
            })
        })
    })
}

fn chk_spectrum_preserved(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 30), |n| {
        max_over(family_states(n), |w| {
            let t = thetas()[1];
            let rho = evolved_state(&diagonal_state(&w), &t);
            let fresh = DensityState::new(rho.sys(), rho.matrix().clone())?.sorted_eigenvalues();
            let mut expect = w.weights().to_vec();
            expect.sort_by(f64::total_cmp);
            Ok(fresh.iter().zip(&expect).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
        })
    })
}

fn chk_fidelity_bloch(_: &VerifyConfig) -> Result<f64> {
    let pts = thetas();
    max_over(pts.iter().flat_map(|a| pts.iter().map(move |b| (a, b))), |(a, b)| {
        let (va, vb) = (a.bloch(), b.bloch());
        let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
        Ok((fidelity_point(a, b) - (1.0 + dot) / 2.0).abs())
    })
}

fn chk_fidelity_overlap(_: &VerifyConfig) -> Result<f64> {
    let pts = thetas();
    let sys = SpinSystem::new(1);
    max_over(pts.iter().flat_map(|a| pts.iter().map(move |b| (a, b))), |(a, b)| {
        let ov = coherent_state(sys, a).dotc(&coherent_state(sys, b)).norm_sqr();
        Ok((fidelity_point(a, b) - ov).abs())
    })
}

// ----- local-bounds ----------------------------------------------------------

fn models(n: usize) -> Vec<ModelPoint> {
    family_states(n)
        .iter()
        .map(|w| unitary_model_derivs(&diagonal_state(w)))
        .collect()
}

fn chk_lyapunov_residual(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 50), |n| {
        max_over(models(n), |m| {
            let ls = slds(&m)?;
            max_over(ls.iter().zip(m.derivs()), |(l, d)| Ok(l.jordan(m.rho().matrix()).max_abs_diff(d)))
        })
    })
}

/// Dense solve of ½(Lρ + ρL) = D via (ρᵀ⊗I + I⊗ρ)/2 acting on vec(L).
pub fn lyapunov_dense(rho: &OperatorMatrix, d: &OperatorMatrix) -> Option<CMatrix> {
    let dim = rho.dim();
    let r = rho.entries();
    let id = CMatrix::identity(dim, dim);
    let a = (r.transpose().kronecker(&id) + id.kronecker(r)) * c(0.5, 0.0);
    let b = DVector::from_iterator(dim * dim, d.entries().iter().copied());
    let x = a.lu().solve(&b)?;
    Some(CMatrix::from_iterator(dim, dim, x.iter().copied()))
}

fn chk_sld_dense_oracle(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 8), |n| {
        max_over(full_rank_states(n), |w| {
            let m = unitary_model_derivs(&diagonal_state(&w));
            let ls = slds(&m)?;
            max_over(ls.iter().zip(m.derivs()), |(l, d)| {
                let oracle = lyapunov_dense(m.rho().matrix(), d).expect("full-rank state");
                Ok((l.entries() - oracle).iter().fold(0.0f64, |a, z| a.max(z.norm())))
            })
        })
    })
}

fn chk_fisher_diagonal(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 50), |n| {
        max_over(models(n), |m| {
            let f = sld_fisher_with(m.rho(), &slds(&m)?);
            Ok(f[(0, 1)].abs().max(f[(1, 0)].abs()).max((f[(0, 0)] - f[(1, 1)]).abs()))
        })
    })
}

fn chk_fisher_psd(cfg: &VerifyConfig) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let ws: Vec<WeightDistribution> = some_n(cfg, 30).into_iter().map(|n| random_weights(&mut rng, n)).collect();
    max_over(ws, |w| {
        let m = unitary_model_derivs(&evolved_state(&diagonal_state(&w), &thetas()[0]));
        let f = sld_fisher_with(m.rho(), &slds(&m)?);
        let min = f.clone().symmetric_eigen().eigenvalues.min();
        Ok((-min).max(0.0).max((f[(0, 1)] - f[(1, 0)]).abs()))
    })
}

fn chk_closed_form_fisher(cfg: &VerifyConfig) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut ws: Vec<WeightDistribution> = some_n(cfg, 50).into_iter().flat_map(family_states).collect();
    for _ in 0..40 {
        let n = rng.random_range(1..=cfg.max_n.clamp(1, 50));
        ws.push(random_weights(&mut rng, n));
    }
    let fault = if cfg.inject_fault { 1e-3 } else { 0.0 };
    max_over(ws, |w| {
        let m = unitary_model_derivs(&diagonal_state(&w));
        let f = sld_fisher_with(m.rho(), &slds(&m)?);
        Ok(rel(unitary_fisher_closed_form(&w) * (1.0 + fault), f[(0, 0)]))
    })
}

fn geometric_models(cfg: &VerifyConfig) -> Vec<(f64, ModelPoint)> {
    some_n(cfg, 50)
        .into_iter()
        .flat_map(|n| {
            [1.5, 2.0, 4.0].map(|r| (r, unitary_model_derivs(&diagonal_state(&geometric_weights(SpinSystem::new(n), r).unwrap()))))
        })
        .collect()
}

fn chk_geometric_sld_proportional(cfg: &VerifyConfig) -> Result<f64> {
    max_over(geometric_models(cfg), |(r, m)| {
        let ls = slds(&m)?;
        let sys = m.rho().sys();
        let k = 2.0 * (r - 1.0) / (r + 1.0);
        Ok(ls[1]
            .max_abs_diff(&angular_momentum(sys, Axis::X).scale(k))
            .max(ls[0].max_abs_diff(&angular_momentum(sys, Axis::Y).scale(-k))))
    })
}

fn chk_geometric_d_invariant(cfg: &VerifyConfig) -> Result<f64> {
    max_over(geometric_models(cfg), |(_, m)| Ok(d_invariance_check(&m, &slds(&m)?)?.residual))
}

fn chk_rld_inverse_identity(cfg: &VerifyConfig) -> Result<f64> {
    max_over(geometric_models(cfg), |(_, m)| {
        let ls = slds(&m)?;
        let f = sld_fisher_with(m.rho(), &ls);
        let f_inv = crate::linalg::symmetric_inverse(&f)?;
        let dm = d_matrix(&m, &ls);
        let ft_inv = crate::linalg::hermitian_inverse(&rld_fisher(&m)?)?;
        let rhs = crate::linalg::to_complex(&f_inv) + crate::linalg::to_complex(&(&f_inv * &dm * &f_inv)) * c(0.0, 0.5);
        let scale = f_inv.abs().max();
        Ok((ft_inv - rhs).iter().fold(0.0f64, |a, z| a.max(z.norm())) / scale)
    })
}

fn chk_d_antisymmetric(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 30), |n| {
        max_over(models(n), |m| {
            let dm = d_matrix(&m, &slds(&m)?);
            Ok((&dm + dm.transpose()).abs().max() / dm.abs().max().max(1.0))
        })
    })
}

fn chk_d_superoperator_defining(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 30), |n| {
        max_over(full_rank_states(n), |w| {
            let rho = evolved_state(&diagonal_state(&w), &thetas()[0]);
            let x = angular_momentum(rho.sys(), Axis::X);
            let y = d_superoperator(&rho, &x);
            let lhs = y.jordan(rho.matrix());
            let rhs = x.commutator(rho.matrix()).scale_complex(I);
            Ok(lhs.max_abs_diff(&rhs))
        })
    })
}

fn chk_re_z_equals_finv(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 30), |n| {
        max_over(models(n), |m| {
            let ls = slds(&m)?;
            let f = sld_fisher_with(m.rho(), &ls);
            let f_inv = crate::linalg::symmetric_inverse(&f)?;
            let z = z_matrix(m.rho(), &x_star(&f, &ls)?);
            Ok((crate::linalg::real_part(&z) - &f_inv).abs().max() / f_inv.abs().max())
        })
    })
}

fn chk_x_star_constraint(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 30), |n| {
        max_over(models(n), |m| {
            let ls = slds(&m)?;
            let f = sld_fisher_with(m.rho(), &ls);
            Ok(x_constraint_residual(&m, &x_star(&f, &ls)?))
        })
    })
}

fn weights_g() -> Vec<RMatrix> {
    vec![
        RMatrix::identity(2, 2),
        RMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
    ]
}

fn chk_ordering_chain(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 30), |n| {
        max_over(models(n), |m| {
            let ls = slds(&m)?;
            let f = sld_fisher_with(m.rho(), &ls);
            let d_inv = d_invariance_check(&m, &ls)?.holds;
            max_over(weights_g(), |g| {
                let s = sld_bound(&f, &g)?;
                let h = hn_upper_from_x_star(&m, &f, &ls, &g)?;
                let mut worst = ((s - h).max(0.0)).max(h - 2.0 * s) / s;
                if d_inv {
                    if let Ok(r) = rld_fisher(&m).and_then(|ft| rld_bound(&ft, &g)) {
                        worst = worst.max((s - r).max(r - 2.0 * s) / s);
                    }
                }
                Ok(worst.max(0.0))
            })
        })
    })
}

fn chk_rld_closed_form(cfg: &VerifyConfig) -> Result<f64> {
    max_over(geometric_models(cfg), |(_, m)| {
        let ls = slds(&m)?;
        let f = sld_fisher_with(m.rho(), &ls);
        let dm = d_matrix(&m, &ls);
        let ft = rld_fisher(&m)?;
        max_over(weights_g(), |g| Ok(rel(rld_bound_d_invariant(&f, &dm, &g)?, rld_bound(&ft, &g)?)))
    })
}

fn chk_rld_equals_hn_geometric(cfg: &VerifyConfig) -> Result<f64> {
    let small: Vec<(f64, ModelPoint)> = geometric_models(cfg)
        .into_iter()
        .filter(|(_, m)| m.rho().sys().n() <= 20)
        .collect();
    max_over(small, |(_, m)| {
        let ls = slds(&m)?;
        let f = sld_fisher_with(m.rho(), &ls);
        let ft = rld_fisher(&m)?;
        max_over(weights_g(), |g| Ok(rel(hn_upper_from_x_star(&m, &f, &ls, &g)?, rld_bound(&ft, &g)?)))
    })
}

fn chk_commuting_model(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 30), |n| {
        let rho = diagonal_state(&binomial_weights(SpinSystem::new(n), 0.6)?);
        let d = {
            let diag: Vec<f64> = rho.matrix().real_diagonal().iter().enumerate().map(|(k, p)| p * (k as f64 - n as f64 * 0.6)).collect();
            OperatorMatrix::from_real_diagonal(&diag)
        };
        let m = ModelPoint::new(rho, vec![d])?;
        let ls = slds(&m)?;
        let f = sld_fisher_with(m.rho(), &ls);
        let ft = rld_fisher(&m)?;
        Ok(rel(ft[(0, 0)].re, f[(0, 0)]).max(ft[(0, 0)].im.abs()))
    })
}

// ----- global-bounds ---------------------------------------------------------

fn chk_slice_completeness(cfg: &VerifyConfig) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    max_over(some_n(cfg, 60), |n| {
        let mut ws = family_states(n);
        ws.push(random_weights(&mut rng, n));
        max_over(ws, |w| {
            let rho = evolved_state(&diagonal_state(&w), &thetas()[1]);
            let (l, r) = bfy_sides(&rho)?;
            Ok(((n as f64 + 2.0) * l + n as f64 * r - 1.0).abs())
        })
    })
}

fn chk_slice_vs_kron(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 12), |n| {
        max_over(family_states(n), |w| {
            let rho = diagonal_state(&w);
            let (l, r) = bfy_sides(&rho)?;
            let proj = coupling_projectors(rho.sys())?;
            let big = OperatorMatrix::from_real_diagonal(&[0.0, 1.0]).kron(rho.matrix());
            let nf = n as f64;
            let lk = (&proj.p_plus * &big).trace().re / (nf + 2.0);
            let rk = (&proj.p_minus * &big).trace().re / nf;
            Ok((l - lk).abs().max((r - rk).abs()))
        })
    })
}

fn chk_binomial_closed(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 60), |n| {
        max_over([0.55, 0.75, 0.95], |p| {
            let rho = diagonal_state(&binomial_weights(SpinSystem::new(n), p)?);
            Ok((optimal_r(&rho)? - binomial_r_closed(n, p)?).abs())
        })
    })
}

fn chk_geometric_closed(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 60), |n| {
        max_over([1.5, 2.0, 4.0], |r| {
            let rho = diagonal_state(&geometric_weights(SpinSystem::new(n), r)?);
            Ok((optimal_r(&rho)? - geometric_r_closed(n, r)?).abs())
        })
    })
}

fn chk_delta_closed(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 60), |n| {
        let sys = SpinSystem::new(n);
        let j = sys.j();
        let a_values: Vec<f64> = (0..=n).map(|k| sys.m_of(k)).filter(|&a| a >= 0.0 && a <= j).collect();
        max_over(a_values, |a| {
            let rho = diagonal_state(&delta_weights(sys, a)?);
            Ok((optimal_r(&rho)? - delta_r_closed(n, a)?).abs())
        })
    })
}

fn chk_delta_bfy_sign(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 60), |n| {
        let sys = SpinSystem::new(n);
        max_over(0..=n, |k| {
            let a = sys.m_of(k);
            let holds = bfy_holds(&diagonal_state(&delta_weights(sys, a)?))?;
            Ok(if holds == (a >= 0.0) { 0.0 } else { 1.0 })
        })
    })
}

fn chk_geometric_remainder(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 60).into_iter().chain([100, 200, 400]), |n| {
        max_over([1.5, 2.0, 4.0], |r| {
            let nf = n as f64;
            let bound = 16.0 * r / ((r - 1.0) * nf * nf * (nf + 2.0)) + 8.0 * nf * r.powf(-nf);
            let diff = (geometric_eta_exact(n, r)? - geometric_eta_asymptotic(n, r)?).abs();
            Ok((diff / bound - 1.0).max(0.0))
        })
    })
}

// ----- classical-baselines ---------------------------------------------------

fn chk_classical_variance(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 200).into_iter().chain([200]), |n| {
        max_over([-2.0, -1.0, -0.1, 0.0, 0.1, 1.0, 2.0], |t| {
            let (_, var) = GeometricClassicalModel::new(n, t)?.summed_moments();
            Ok((geometric_fisher_natural(n, t) - var).abs() / var.max(1.0))
        })
    })
}

fn chk_classical_mean(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 200).into_iter().chain([200]), |n| {
        max_over([-2.0, -1.0, -0.1, 0.0, 0.1, 1.0, 2.0], |t| {
            let (mean, _) = GeometricClassicalModel::new(n, t)?.summed_moments();
            Ok((geometric_expectation_param(n, t) - mean).abs())
        })
    })
}

fn chk_binomial_mse(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 200).into_iter().chain([200]), |n| {
        max_over([0.1, 0.5, 0.75], |p| {
            let (mean, var) = binomial_estimator_moments(n, p)?;
            Ok((mean - p).abs().max((var - binomial_direct_mse(n, p)?).abs()))
        })
    })
}

fn chk_number_basis(cfg: &VerifyConfig) -> Result<f64> {
    max_over(some_n(cfg, 200), |n| {
        max_over([0.5, 2.0, 3.0], |r| {
            let rho = diagonal_state(&geometric_weights(SpinSystem::new(n), r)?);
            let pk = GeometricClassicalModel::from_ratio(n, r)?.probabilities();
            Ok(rho
                .matrix()
                .real_diagonal()
                .iter()
                .zip(&pk)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
        })
    })
}

// ----- covariant-sim ---------------------------------------------------------

fn chk_acceptance_rate(cfg: &VerifyConfig) -> Result<f64> {
    // metric: |rate − 1/(2j+1)| in units of its standard error
    max_over(some_n(cfg, 8), |n| {
        let rho = evolved_state(&diagonal_state(&geometric_weights(SpinSystem::new(n), 2.0)?), &thetas()[0]);
        let mut rng = ChaCha8Rng::seed_from_u64(5 + n as u64);
        let trials = 20_000usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..trials {
            let p = uniform_proposal(&mut rng);
            let a = crate::sim::outcome_density(&rho, &p) / (n as f64 + 1.0);
            sum += a;
            sum_sq += a * a;
        }
        let mean = sum / trials as f64;
        let se = ((sum_sq / trials as f64 - mean * mean) / trials as f64).sqrt();
        Ok((mean - 1.0 / (n as f64 + 1.0)).abs() / se)
    })
}

fn chk_sim_determinism(_: &VerifyConfig) -> Result<f64> {
    let w = geometric_weights(SpinSystem::new(3), 2.0)?;
    let cfg = SimConfig::new(w, thetas()[0], 2000, 3)?;
    let a = average_fidelity(&cfg)?;
    let b = average_fidelity(&cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    sample_outcome(&diagonal_state(&delta_weights(SpinSystem::new(1), 0.5)?), &mut rng)?;
    Ok(if a == b { 0.0 } else { 1.0 })
}

fn registry() -> Vec<Check> {
    macro_rules! check {
        ($area:literal, $name:literal, $tol:expr, $f:ident) => {
            Check {
                name: $name,
                area: $area,
                tol: $tol,
                run: $f,
            }
        };
    }
    vec![
        check!("spin-core", "commutator [J1,J2] = iJ3", 1e-12, chk_comm_12),
        check!("spin-core", "commutator [J2,J3] = iJ1", 1e-12, chk_comm_23),
        check!("spin-core", "commutator [J3,J1] = iJ2", 1e-12, chk_comm_31),
        check!("spin-core", "Casimir = j(j+1) I (relative)", 1e-12, chk_casimir),
        check!("spin-core", "J- = J+ adjoint", 0.0, chk_ladder_adjoint),
        check!("spin-core", "generators Hermitian", 0.0, chk_generators_hermitian),
        check!("spin-core", "orbit unitary U U† = I", 1e-10, chk_rotation_unitary),
        check!("spin-core", "coherent state spin length j", 1e-10, chk_coherent_spin_length),
        check!("spin-core", "coherent expansion = matrix exponential", 1e-10, chk_coherent_vs_expm),
        check!("spin-core", "projectors idempotent", 1e-12, chk_proj_idempotent),
        check!("spin-core", "projectors orthogonal", 1e-12, chk_proj_orthogonal),
        check!("spin-core", "projectors complete", 1e-12, chk_proj_complete),
        check!("spin-core", "projector ranks 2j+2, 2j", 1e-10, chk_proj_ranks),
        check!("spin-core", "projectors are total-spin eigenspaces", 1e-12, chk_proj_casimir),
        check!("spin-core", "projectors commute with U½⊗Uj", 1e-10, chk_proj_commutant),
        check!("state-families", "weights sum to 1", 1e-12, chk_weights_normalized),
        check!("state-families", "binomial and geometric ratios", 1e-12, chk_weight_ratios),
        check!("state-families", "orbit states trace 1 and PSD", 1e-10, chk_state_trace_psd),
        check!("state-families", "orbit preserves spectrum", 1e-12, chk_spectrum_preserved),
        check!("state-families", "fidelity = (1 + v·v̂)/2", 1e-14, chk_fidelity_bloch),
        check!("state-families", "fidelity = coherent overlap", 1e-14, chk_fidelity_overlap),
        check!("local-bounds", "SLD Lyapunov residual", 1e-10, chk_lyapunov_residual),
        check!("local-bounds", "SLD = dense vectorized solve", 1e-10, chk_sld_dense_oracle),
        check!("local-bounds", "Fisher diagonal, F11 = F22", 1e-10, chk_fisher_diagonal),
        check!("local-bounds", "Fisher symmetric PSD", 1e-10, chk_fisher_psd),
        check!("local-bounds", "closed-form Fisher = generic solver (relative)", 1e-9, chk_closed_form_fisher),
        check!("local-bounds", "geometric SLD ∝ generators", 1e-10, chk_geometric_sld_proportional),
        check!("local-bounds", "geometric D-invariance residual", 1e-8, chk_geometric_d_invariant),
        check!("local-bounds", "RLD inverse = F⁻¹ + (i/2)F⁻¹DF⁻¹ (relative)", 1e-8, chk_rld_inverse_identity),
        check!("local-bounds", "D matrix antisymmetric", 1e-9, chk_d_antisymmetric),
        check!("local-bounds", "D superoperator defining relation", 1e-10, chk_d_superoperator_defining),
        check!("local-bounds", "Re Z(X*) = F⁻¹ (relative)", 1e-9, chk_re_z_equals_finv),
        check!("local-bounds", "Tr X*_j D_k = δ_jk", 1e-9, chk_x_star_constraint),
        check!("local-bounds", "ordering SLD ≤ HN, RLD ≤ 2 SLD", 1e-8, chk_ordering_chain),
        check!("local-bounds", "RLD bound = D-invariant closed form", 1e-8, chk_rld_closed_form),
        check!("local-bounds", "geometric HN(X*) = RLD bound, n ≤ 20", 1e-8, chk_rld_equals_hn_geometric),
        check!("local-bounds", "commuting model: RLD = SLD", 1e-12, chk_commuting_model),
        check!("global-bounds", "slice completeness", 1e-10, chk_slice_completeness),
        check!("global-bounds", "BFY sides: slice = full Kronecker trace", 1e-12, chk_slice_vs_kron),
        check!("global-bounds", "binomial R = (np+1)/(n+2)", 1e-9, chk_binomial_closed),
        check!("global-bounds", "geometric R closed form", 1e-9, chk_geometric_closed),
        check!("global-bounds", "delta R = (n/2+a+1)/(n+2)", 1e-9, chk_delta_closed),
        check!("global-bounds", "delta BFY holds iff a ≥ 0", 0.0, chk_delta_bfy_sign),
        check!("global-bounds", "geometric error expansion remainder", 1e-9, chk_geometric_remainder),
        check!("classical-baselines", "Var(k) = F_θ", 1e-10, chk_classical_variance),
        check!("classical-baselines", "E[k] = η(θ)", 1e-10, chk_classical_mean),
        check!("classical-baselines", "binomial k/n unbiased, MSE p(1-p)/n", 1e-12, chk_binomial_mse),
        check!("classical-baselines", "number-basis law = P_θ", 1e-12, chk_number_basis),
        check!("covariant-sim", "acceptance rate 1/(2j+1) (σ units)", 5.0, chk_acceptance_rate),
        check!("covariant-sim", "seed determinism", 0.0, chk_sim_determinism),
    ]
}

pub fn check_count() -> usize {
    registry().len()
}

/// Runs every check; checks run in parallel, output order is fixed.
pub fn run_verify(cfg: &VerifyConfig) -> VerifyReport {
    let checks = registry()
        .par_iter()
        .map(|chk| match (chk.run)(cfg) {
            Ok(metric) => CheckResult {
                name: chk.name.to_string(),
                area: chk.area.to_string(),
                passed: metric.is_finite() && metric <= chk.tol,
                metric: Some(metric),
                tolerance: chk.tol,
                detail: String::new(),
            },
            Err(e) => CheckResult {
                name: chk.name.to_string(),
                area: chk.area.to_string(),
                passed: false,
                metric: None,
                tolerance: chk.tol,
                detail: format!("{}: {e}", e.code()),
            },
        })
        .collect();
    VerifyReport {
        max_n: cfg.max_n,
        checks,
    }
}
