use thiserror::Error;

/// Errors raised by the bound solvers and state constructors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("generator not Hermitian")]
    NotHermitian,

    #[error("invalid density state: {0}")]
    InvalidState(String),

    #[error("no lower coupled space (spin 0 has no j-1/2 component)")]
    NoLowerCoupledSpace,

    #[error("derivative leaves support (kernel block entry {0:e})")]
    DerivativeLeavesSupport(f64),

    #[error("RLD undefined for singular state (min eigenvalue {0:e})")]
    SingularState(f64),

    #[error("Fisher matrix singular (condition number {0:e})")]
    SingularFisher(f64),

    #[error("X* constraint violated (residual {0:e})")]
    ConstraintViolated(f64),

    #[error("covariant optimality condition (BFY) violated: lhs {lhs} < rhs {rhs}")]
    BfyViolated { lhs: f64, rhs: f64 },

    #[error("pathological acceptance: no sample accepted after {0} proposals")]
    PathologicalAcceptance(u64),

    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

impl Error {
    /// Machine-readable reason code used in sweep rows and CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DOMAIN",
            Error::NotHermitian => "NOT_HERMITIAN",
            Error::InvalidState(_) => "INVALID_STATE",
            Error::NoLowerCoupledSpace => "NO_LOWER_SPACE",
            Error::DerivativeLeavesSupport(_) => "SLD_SUPPORT",
            Error::SingularState(_) => "RLD_SINGULAR",
            Error::SingularFisher(_) => "FISHER_SINGULAR",
            Error::ConstraintViolated(_) => "XSTAR_CONSTRAINT",
            Error::BfyViolated { .. } => "BFY_FAILS",
            Error::PathologicalAcceptance(_) => "PATHOLOGICAL_ACCEPTANCE",
            Error::InvalidSpec(_) => "INVALID_SPEC",
            Error::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
        }
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::InvalidSpec(_)
                | Error::InvalidState(_)
                | Error::DimensionMismatch { .. }
                | Error::NoLowerCoupledSpace
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
