use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum NcdError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error in {path} at row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("eigensolver did not converge: {0}")]
    EigenNonConvergence(String),

    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    #[error("no knee found in the curve")]
    NoKnee,

    #[error("checksum mismatch for {path}: recorded {expected}, found {actual}")]
    ChecksumMismatch {
        path: String,
        expected: String,
        actual: String,
    },

    #[error("missing source data: {0}")]
    MissingSource(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, NcdError>;

impl NcdError {
    /// Shorthand for the most common variant.
    pub fn invalid(msg: impl Into<String>) -> Self {
        NcdError::InvalidInput(msg.into())
    }
}
