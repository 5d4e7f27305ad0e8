use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid covariance triple (sii={sii}, sjj={sjj}, sij={sij})")]
    InvalidCovariance { sii: f64, sjj: f64, sij: f64 },

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperParams(String),

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("matrix is not positive definite (smallest eigenvalue estimate {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{file}: content hash mismatch (manifest {expected}, file {actual})")]
    HashMismatch {
        file: PathBuf,
        expected: String,
        actual: String,
    },

    #[error("{file}: truncated payload (expected {expected} bytes, found {actual})")]
    Truncated {
        file: PathBuf,
        expected: usize,
        actual: usize,
    },

    #[error("{file}: bad magic, expected {expected:?}")]
    BadMagic { file: PathBuf, expected: &'static str },

    #[error("{file}: index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        file: PathBuf,
        index: usize,
        bound: usize,
    },

    #[error("{file}: {reason}")]
    InvalidDataset { file: PathBuf, reason: String },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// True for failures caused by the inputs (bad files, shapes, flags) as
    /// opposed to numerical breakdown during computation.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::NotPositiveDefinite { .. } | Error::Numeric(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
