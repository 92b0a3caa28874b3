use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),
    #[error("eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("weight exponent {0} outside (-1, 1)")]
    InvalidExponent(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported space pair: {0}")]
    UnsupportedPair(String),
    #[error("incompatible norm oracles: {0}")]
    IncompatibleOracles(String),
    #[error("rotation needs an even dimension, got {0}")]
    OddDimension(usize),
    #[error("block of size {size} overruns a system of dimension {dim}")]
    BlockOverrun { size: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("enumeration budget exceeded ({needed} > {cap}); use heuristic mode")]
    BudgetExceeded { needed: u128, cap: u128 },
    #[error("insufficient data: need {needed} points, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
