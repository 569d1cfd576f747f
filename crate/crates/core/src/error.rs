use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("dataset is empty; dimension is undefined")]
    EmptyDataset,

    #[error("unsupported dimension: expected {expected}, got {got}")]
    UnsupportedDimension { expected: usize, got: usize },

    #[error("gradient is singular at {0:?}")]
    SingularPoint(Vec<f64>),

    #[error("operation `{operation}` is not supported for {variant} defining functions")]
    UnsupportedVariant {
        operation: &'static str,
        variant: &'static str,
    },

    #[error("non-finite value {value} at grid node ({x}, {y})")]
    Evaluation { x: f64, y: f64, value: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Parse { .. } => "parse-error",
            Error::EmptyDataset => "empty-dataset",
            Error::UnsupportedDimension { .. } => "unsupported-dimension",
            Error::SingularPoint(_) => "singular-point",
            Error::UnsupportedVariant { .. } => "unsupported-variant",
            Error::Evaluation { .. } => "evaluation-error",
            Error::Io { .. } => "io-error",
            Error::Json(_) => "json-error",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "dimension mismatch: expected {expected}, got {got}"
        )))
    }
}
