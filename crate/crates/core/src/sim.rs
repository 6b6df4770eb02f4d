//! Monte Carlo sampling of the covariant POVM seeded by the top state |j;j⟩.
//!
//! Outcomes are drawn by rejection: a proposal θ̂ uniform on the sphere is
//! accepted with probability ⟨ψ(θ̂)|ρ_θ|ψ(θ̂)⟩, where ψ(θ̂) = U_θ̂|j;j⟩. The
//! accepted points follow the POVM outcome law exactly.
//!
//! Sample `i` draws from a ChaCha8 stream keyed by `(seed, i)`, so results do
//! not depend on the thread count.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::global::bfy_holds;
use crate::linalg::{c, OperatorMatrix, C64};
use crate::spin::SpinSystem;
use crate::states::{diagonal_state, evolved_state, fidelity_point, DensityState, ParamPoint, WeightDistribution};

/// Proposals allowed per accepted sample.
pub const MAX_PROPOSALS: u64 = 1_000_000;

const CHUNK: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub weights: WeightDistribution,
    pub true_theta: ParamPoint,
    pub samples: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(weights: WeightDistribution, true_theta: ParamPoint, samples: usize, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::Domain("samples must be at least 1".into()));
        }
        Ok(Self {
            weights,
            true_theta,
            samples,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.weights.sys().n()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub mean_fidelity: f64,
    pub std_error: f64,
    pub acceptance_rate: f64,
    pub samples_used: usize,
    pub proposals: u64,
    /// Mean Bloch vector of the outcomes; informational (covariant estimators are biased).
    pub mean_outcome_bloch: [f64; 3],
}

/// U_θ̂|j;j⟩ from the spin-coherent expansion: amplitude on index k is
/// √C(n,k) cos^k(|θ̂|/2) (i e^{−iφ̂} sin(|θ̂|/2))^{n−k}.
pub fn coherent_state(sys: SpinSystem, theta_hat: &ParamPoint) -> DVector<C64> {
    let n = sys.n();
    let (s, co) = (theta_hat.norm() / 2.0).sin_cos();
    let down = c(0.0, 1.0) * C64::from_polar(s, -theta_hat.phi());
    let up = c(co, 0.0);
    let mut out = DVector::from_element(n + 1, c(0.0, 0.0));
    let mut log_binom = 0.0f64;
    for k in 0..=n {
        if k > 0 {
            log_binom += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        out[k] = up.powu(k as u32) * down.powu((n - k) as u32) * (0.5 * log_binom).exp();
    }
    out
}

/// ⟨ψ|ρ|ψ⟩, clamped to [0, 1].
fn overlap(rho: &OperatorMatrix, psi: &DVector<C64>) -> f64 {
    let v = rho.entries() * psi;
    psi.dotc(&v).re.clamp(0.0, 1.0)
}

/// Outcome density (2j+1)⟨ψ(θ̂)|ρ|ψ(θ̂)⟩ with respect to the normalized invariant measure.
pub fn outcome_density(rho: &DensityState, theta_hat: &ParamPoint) -> f64 {
    (rho.sys().dim() as f64) * overlap(rho.matrix(), &coherent_state(rho.sys(), theta_hat))
}

/// A point uniform on the sphere: cos|θ̂| ~ U[−1, 1], φ̂ ~ U[0, 2π).
pub fn uniform_proposal<R: Rng>(rng: &mut R) -> ParamPoint {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    ParamPoint::from_polar(z.acos(), phi).expect("acos lies in [0, π]")
}

/// Draws one outcome; returns it with the number of proposals used.
pub fn sample_outcome<R: Rng>(rho: &DensityState, rng: &mut R) -> Result<(ParamPoint, u64)> {
    let sys = rho.sys();
    for attempt in 1..=MAX_PROPOSALS {
        let prop = uniform_proposal(rng);
        let acc = overlap(rho.matrix(), &coherent_state(sys, &prop));
        if rng.random::<f64>() < acc {
            return Ok((prop, attempt));
        }
    }
    Err(Error::PathologicalAcceptance(MAX_PROPOSALS))
}

fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Default)]
struct Acc {
    sum: f64,
    sum_sq: f64,
    bloch: [f64; 3],
    proposals: u64,
}

fn simulate_state(rho: &DensityState, true_theta: &ParamPoint, samples: usize, seed: u64) -> Result<SimResult> {
    let mut acc = Acc::default();
    let mut start = 0usize;
    while start < samples {
        let end = (start + CHUNK).min(samples);
        let chunk: Vec<(f64, [f64; 3], u64)> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(seed, i as u64);
                let (hat, used) = sample_outcome(rho, &mut rng)?;
                Ok((fidelity_point(true_theta, &hat), hat.bloch(), used))
            })
            .collect::<Result<_>>()?;
        // fixed summation order keeps the result independent of scheduling
        for (f, b, used) in chunk {
            acc.sum += f;
            acc.sum_sq += f * f;
            for (t, x) in acc.bloch.iter_mut().zip(b) {
                *t += x;
            }
            acc.proposals += used;
        }
        start = end;
    }
    let n = samples as f64;
    let mean = acc.sum / n;
    let var = if samples > 1 {
        ((acc.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SimResult {
        mean_fidelity: mean.clamp(0.0, 1.0),
        std_error: (var / n).sqrt(),
        acceptance_rate: n / acc.proposals as f64,
        samples_used: samples,
        proposals: acc.proposals,
        mean_outcome_bloch: acc.bloch.map(|x| x / n),
    })
}

/// Empirical average fidelity of the covariant estimator at `cfg.true_theta`.
/// Requires the BFY condition, under which this POVM is the optimum.
pub fn average_fidelity(cfg: &SimConfig) -> Result<SimResult> {
    let rho0 = diagonal_state(&cfg.weights);
    if !bfy_holds(&rho0)? {
        let (lhs, rhs) = crate::global::bfy_sides(&rho0)?;
        return Err(Error::BfyViolated { lhs, rhs });
    }
    let rho = evolved_state(&rho0, &cfg.true_theta);
    simulate_state(&rho, &cfg.true_theta, cfg.samples, cfg.seed)
}

/// K points spread over the sphere on a Fibonacci lattice, as parameter points.
pub fn fibonacci_grid(k: usize) -> Vec<ParamPoint> {
    let golden = PI * (3.0 - 5.0f64.sqrt());
    (0..k)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / k as f64;
            let phi = (golden * i as f64).rem_euclid(2.0 * PI);
            ParamPoint::from_polar(z.clamp(-1.0, 1.0).acos(), phi).expect("acos lies in [0, π]")
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub theta: ParamPoint,
    pub result: SimResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseScan {
    pub points: Vec<ScanPoint>,
    pub min_mean: f64,
    pub argmin: usize,
}

/// Runs the simulation at every grid point. Point `i` uses seed
/// `cfg.seed + i·0x9E3779B97F4A7C15` (wrapping), so point 0 reproduces
/// [`average_fidelity`].
pub fn worst_case_scan(cfg: &SimConfig, grid: &[ParamPoint]) -> Result<WorstCaseScan> {
    if grid.is_empty() {
        return Err(Error::Domain("theta grid is empty".into()));
    }
    let points = grid
        .iter()
        .enumerate()
        .map(|(i, theta)| {
            let point_cfg = SimConfig {
                true_theta: *theta,
                seed: cfg.seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                ..cfg.clone()
            };
            Ok(ScanPoint {
                theta: *theta,
                result: average_fidelity(&point_cfg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (argmin, min_mean) = points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.result.mean_fidelity))
        .fold((0, f64::INFINITY), |best, x| if x.1 < best.1 { x } else { best });
    Ok(WorstCaseScan {
        points,
        min_mean,
        argmin,
    })
}
