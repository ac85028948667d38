use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IrtError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate scale: {0}")]
    DegenerateScale(String),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("undefined complexity: {0}")]
    UndefinedComplexity(String),

    #[error("empty coreset")]
    EmptyCoreset,

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl IrtError {
    /// Process exit code: 2 for configuration and input errors, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Numeric(_) | Self::DegenerateScale(_) | Self::DegenerateLabels(_) | Self::UndefinedComplexity(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, IrtError>;

pub(crate) fn invalid(msg: impl Into<String>) -> IrtError {
    IrtError::InvalidArgument(msg.into())
}
