use thiserror::Error;

pub type Result<T, E = NnError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite values produced by {0}")]
    NonFinite(String),
    #[error("backward called without a train-mode forward on the current parameters")]
    StaleCache,
    #[error("invalid layer spec: {0}")]
    InvalidSpec(String),
    #[error("batchnorm needs a batch of at least 2 in train mode")]
    BatchTooSmall,
    #[error("spatial size collapsed below 1x1 ({0})")]
    SpatialCollapse(String),
    #[error("optimizer: {0}")]
    Optimizer(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
