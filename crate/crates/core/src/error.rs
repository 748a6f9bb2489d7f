use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The request does not fit the configured memory or time budget.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Input data does not cover the range an operation needs.
    #[error("range error: {0}")]
    Range(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A multiplicative function has no value for a prime power it was asked about.
    #[error("no value for f({prime}^{exponent}) in function '{function}'")]
    MissingPrimePower {
        function: String,
        prime: u64,
        exponent: u32,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
