use std::path::PathBuf;

use thiserror::Error;

use crate::optimize::TrainHistory;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    Shape {
        what: String,
        expected: String,
        got: String,
    },

    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    /// A non-finite intermediate met while differentiating a rollout.
    #[error("non-finite intermediate at step {step}, layer {layer}")]
    NumericAt { step: usize, layer: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported architecture: {0}")]
    UnsupportedArch(String),

    #[error("warm-start did not reach compliance; residual hinge per layer: {residuals:?}")]
    WarmStartFailed { residuals: Vec<f64> },

    #[error("training diverged at epoch {epoch} (non-finite loss)")]
    Diverged {
        epoch: usize,
        history: Box<TrainHistory>,
    },

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(what: impl Into<String>, expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            what: what.into(),
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
