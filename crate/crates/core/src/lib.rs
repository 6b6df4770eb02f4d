//! Local Cramér-Rao-type bounds (SLD, RLD, D-invariant Holevo-Nagaoka) and
//! global covariant-measurement bounds for SU(2) orbits of diagonal spin-j
//! probe states.
//!
//! Module map:
//!
//! - [`spin`]: ladder and angular-momentum operators, Casimir, Hermitian
//!   exponential, ½ ⊗ j coupling projectors.
//! - [`states`]: binomial, geometric and delta probe weights, orbit states,
//!   fidelity on the parameter sphere.
//! - [`local`]: SLD/RLD solvers, Fisher matrices, D-superoperator and the
//!   local bounds.
//! - [`global`]: the covariant optimum, its condition, and closed forms.
//! - [`classical`]: number-basis estimators for the binomial and geometric
//!   families.
//! - [`sim`]: Monte Carlo sampling of the optimal covariant POVM.
//! - [`sweep`]: grid evaluation of local and global quantities.
//! - [`verify`]: the invariant suite behind `spinj verify`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod error;
pub mod global;
pub mod linalg;
pub mod local;
pub mod sim;
pub mod spin;
pub mod states;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{OperatorMatrix, Spectrum, C64};
pub use spin::SpinSystem;
pub use states::{DensityState, FamilyTag, ParamPoint, WeightDistribution};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
