use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("dimension {0} is not prime")]
    NotPrime(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid measurement: {0}")]
    InvalidPovm(String),

    #[error("zero-probability branch (p = {0:e})")]
    ZeroProbability(f64),

    #[error("reduced state is rank deficient (rank {rank} of {dim})")]
    RankDeficient { rank: usize, dim: usize },

    #[error("unsupported measurement: {0}")]
    UnsupportedMeasurement(String),

    #[error("error rate Q = {q} outside feasible range [{lo}, {hi}]")]
    InfeasibleQ { q: f64, lo: f64, hi: f64 },

    #[error("infeasible attack family: {0}")]
    InfeasibleFamily(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("group generation did not close within {0} elements")]
    GroupTooLarge(usize),

    #[error("no sign change in [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("protocol file: {0}")]
    ProtocolFile(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
