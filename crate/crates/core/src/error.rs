use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("image error: {0}")]
    Image(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("model validation failed: {0}")]
    Model(String),

    #[error("aggregation left pixel ({row}, {col}) uncovered")]
    Uncovered { row: usize, col: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a failure while working.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::Domain(_)
                | Error::InvalidConfig(_)
                | Error::InsufficientData(_)
                | Error::UnsupportedFormat(_)
                | Error::Model(_)
                | Error::Json(_)
                | Error::Image(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
