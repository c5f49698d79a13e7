use thiserror::Error;

use crate::graph::VertexId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ingestion error: {0}")]
    Ingestion(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("codec error: {0}")]
    Codec(String),

    #[error("key not found: {0}")]
    NotFound(String),

    #[error("storage error: {0}")]
    Storage(String),

    #[error("job setup error: {0}")]
    Setup(String),

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("algorithm `{0}` is already registered")]
    DuplicateAlgorithm(String),

    #[error("job aborted at superstep {superstep}: {reason}")]
    Aborted { superstep: u64, reason: String },

    #[error("worker {worker} failed: {reason}")]
    Worker { worker: u32, reason: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("vertex {0} is out of range")]
    VertexOutOfRange(VertexId),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn codec(msg: impl Into<String>) -> Self {
        Error::Codec(msg.into())
    }

    pub fn is_not_found(&self) -> bool {
        matches!(self, Error::NotFound(_))
    }
}
