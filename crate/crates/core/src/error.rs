use thiserror::Error;

/// Errors produced by the lattice and operator routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid norm spec: {0}")]
    InvalidNorm(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("dimension {n} exceeds the exact enumeration cap {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("norm spec {0} has no exact operator norm for this routine")]
    UnsupportedNorm(String),

    #[error("matrix is singular or ill-conditioned (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("malformed JSON: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, LatticeError>;

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(LatticeError::DimensionMismatch { expected, actual })
    }
}
