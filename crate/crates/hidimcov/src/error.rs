use thiserror::Error;

/// Errors surfaced by the estimation, simulation and IO layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("lag {tau} out of range for sample size {n}")]
    LagOutOfRange { tau: usize, n: usize },

    #[error("bandwidth {m} must be smaller than the sample size {n}")]
    BandwidthTooLarge { m: usize, n: usize },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("factorization failed even after maximal diagonal jitter")]
    FactorizationFailed,

    #[error("gaussian innovations required for {0}")]
    GaussianRequired(&'static str),

    #[error(
        "coherence target unreachable after {tries} tries per vector \
         (best family coherence found: {best_coherence})"
    )]
    CoherenceUnreachable { tries: u64, best_coherence: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed file: {0}")]
    Format(String),
}
