//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by dataset handling, training, scoring, and model I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Filesystem problem, wrapped with the offending path.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed CSV input. `row` is the 1-based row in the file; the message
    /// carries the column when one is known.
    #[error("{path}:{row}: {message}")]
    CsvFormat {
        path: String,
        row: usize,
        message: String,
    },

    /// An argument outside its documented domain (counts, fractions, grids).
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Point/model dimensionality disagreement.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A model file that does not match the documented schema.
    #[error("model file error: {0}")]
    ModelFormat(String),

    /// A model file written by a newer (or unknown) format revision.
    #[error("unsupported model format_version {found}, this build reads version {supported}")]
    UnsupportedVersion { found: u64, supported: u32 },

    /// A model file whose integrity check failed.
    #[error("corrupt model: {0}")]
    CorruptModel(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<String>, row: usize, message: impl Into<String>) -> Self {
        Error::CsvFormat {
            path: path.into(),
            row,
            message: message.into(),
        }
    }
}
