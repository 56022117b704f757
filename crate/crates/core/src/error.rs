//! Error type shared by every subsystem.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, SciError>;

#[derive(Debug, thiserror::Error)]
pub enum SciError {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("missing tensor `{0}` in weight file")]
    MissingTensor(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("no input frames: {0}")]
    NoInput(String),

    #[error("unrecoverable measurement: {0}")]
    Unrecoverable(String),

    #[error("manifest verification failed: {0}")]
    ManifestMismatch(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl SciError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SciError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        SciError::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
