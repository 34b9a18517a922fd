use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mesh parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("mesh invariant violated: {0}")]
    MeshInvariant(String),

    #[error("interface snapping failed: {0}")]
    Snap(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("field blow-up at step {step}: max |field| = {magnitude:e} exceeds guard {threshold:e}")]
    BlowUp {
        step: usize,
        magnitude: f64,
        threshold: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
