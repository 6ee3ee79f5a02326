use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is not connected")]
    NotConnected,
    #[error("malformed graph: {0}")]
    Malformed(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(u32),
    #[error("unknown edge {0}")]
    UnknownEdge(u32),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("partition is crossing")]
    NotNoncrossing,
    #[error("{what} of size {size} exceeds cap {cap}")]
    CapExceeded { what: &'static str, size: usize, cap: usize },
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("moment missing for word {0}")]
    MissingMoment(String),
    #[error("unknown generator {0}")]
    UnknownGenerator(u32),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unknown name {0}")]
    UnknownName(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
