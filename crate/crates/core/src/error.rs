use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("particle number mismatch: expected {expected}, found {found}")]
    ParticleMismatch { expected: usize, found: usize },

    #[error("invalid occupation vector: {0}")]
    InvalidOccupations(String),

    #[error("occupation vector lies outside the polytope: constraint `{constraint}` evaluates to {value:e}")]
    OutsidePolytope { constraint: String, value: f64 },

    #[error("wavefunction is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("matrix is not hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("basis function `{label}` is numerically linearly dependent (overlap condition number {condition:e})")]
    LinearDependence { label: String, condition: f64 },

    #[error("configuration space too large: {0} determinants")]
    SpaceTooLarge(usize),

    #[error("ground state is degenerate (gap {0:e})")]
    DegenerateGroundState(f64),

    #[error("no convergence after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged { iterations: usize, gradient_norm: f64 },

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
