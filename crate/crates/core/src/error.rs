use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Fatal ingestion failure (missing or unreadable repository root).
    #[error("ingest error: {0}")]
    Ingest(String),

    /// Invalid configuration value or unknown identifier.
    #[error("configuration error: {0}")]
    Config(String),

    /// Mathematical precondition violated (dimension mismatch, zero vector).
    #[error("domain error: {0}")]
    Domain(String),

    /// Embedding provider failed after retries.
    #[error("embedding provider error: {0}")]
    Provider(String),

    /// Embedding provider returned data that violates the wire contract.
    #[error("embedding contract violation: {0}")]
    ContractViolation(String),

    /// Snapshot could not be written or failed a validation check on load.
    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
