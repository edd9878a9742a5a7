use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("shortfall: requested {requested} {label} instances but only {available} available")]
    Shortfall {
        label: String,
        requested: usize,
        available: usize,
    },

    #[error(transparent)]
    Model(#[from] ModelError),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

/// Failures decoding a serialized model. Each variant is a distinct,
/// stable error condition.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("not a model file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported model format version {found} (expected {expected})")]
    Version { found: u16, expected: u16 },
    #[error("model file truncated")]
    Truncated,
    #[error("model file corrupt: {0}")]
    Corrupt(String),
}

impl ModelError {
    /// Numeric code for scripting.
    pub fn code(&self) -> u8 {
        match self {
            ModelError::BadMagic => 10,
            ModelError::Version { .. } => 11,
            ModelError::Truncated => 12,
            ModelError::Corrupt(_) => 13,
        }
    }
}
