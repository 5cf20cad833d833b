//! Error taxonomy shared by every module. Diagnostics carry f64 copies of
//! the offending values regardless of the scalar type in use.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum SolverError {
    /// A configuration invariant is violated (which field, why).
    #[error("bad config: {0}")]
    BadConfig(String),

    /// A value left the admissible domain of an operation.
    #[error("domain error: {0}")]
    DomainError(String),

    /// Flux magnitude squared exceeds alpha^2, so the dual algebraic
    /// equation has no solution: alpha is too small for the geometry.
    #[error("flux magnitude exceeds Lipschitz bound: |theta|^2 = {q} > alpha^2 = {limit}")]
    FluxExceedsBound { q: f64, limit: f64 },

    /// No admissible flux constant exists (alpha too small for the annulus).
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A bracketed root-find found no sign change.
    #[error("no root: {0}")]
    NoRoot(String),

    /// Unit mass is unreachable on the annulus (outer radius too small
    /// relative to the inner radius, alpha and n).
    #[error("insufficient outer radius: {0}")]
    InsufficientOuterRadius(String),

    /// A profile or config file could not be parsed.
    #[error("malformed input: {0}")]
    Malformed(String),
}

impl SolverError {
    /// Process exit code contract: 0 ok, 1 verification failure,
    /// 2 infeasible, 3 no root, 4 bad config / malformed input.
    pub fn exit_code(&self) -> i32 {
        match self {
            SolverError::Infeasible(_)
            | SolverError::InsufficientOuterRadius(_)
            | SolverError::FluxExceedsBound { .. } => 2,
            SolverError::NoRoot(_) => 3,
            SolverError::BadConfig(_)
            | SolverError::DomainError(_)
            | SolverError::Malformed(_) => 4,
        }
    }

    /// Stable machine-readable tag for the diagnostic stream.
    pub fn kind(&self) -> &'static str {
        match self {
            SolverError::BadConfig(_) => "BadConfig",
            SolverError::DomainError(_) => "DomainError",
            SolverError::FluxExceedsBound { .. } => "FluxExceedsBound",
            SolverError::Infeasible(_) => "Infeasible",
            SolverError::NoRoot(_) => "NoRoot",
            SolverError::InsufficientOuterRadius(_) => "InsufficientOuterRadius",
            SolverError::Malformed(_) => "Malformed",
        }
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;
