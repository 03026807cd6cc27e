use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("series too short: need at least {min} observations, got {len}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("non-finite observation at position {position}")]
    NonFinite { position: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("gamma must lie in [0, 1/2], got {0}")]
    GammaOutOfRange(f64),

    #[error("probability must lie strictly between 0 and 1, got {0}")]
    ProbabilityOutOfRange(f64),

    #[error("lag {lag} out of range for a series of length {n}")]
    LagOutOfRange { lag: usize, n: usize },

    #[error("window length {lambda} out of range 1..={max}")]
    WindowOutOfRange { lambda: usize, max: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("estimated shift is zero, the asymptotic interval is undefined")]
    ZeroShift,

    #[error(
        "argmax landed near the grid boundary in {:.4}% of replicates (limit {:.2}%); increase the half-width",
        fraction * 100.0,
        limit * 100.0
    )]
    BoundaryHits { fraction: f64, limit: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
