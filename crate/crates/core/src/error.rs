use std::io;

use thiserror::Error;

/// Errors raised by the model, planner, environment and agent code.
#[derive(Debug, Error)]
pub enum PddmError {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset capacity {0} exhausted")]
    DatasetFull(usize),
    #[error("action component {value} at index {index} outside [-1, 1]")]
    ActionOutOfRange { index: usize, value: f64 },
    #[error("checkpoint version mismatch: {0}")]
    VersionMismatch(String),
    #[error("checkpoint truncated: {0}")]
    Truncated(String),
    #[error("unknown environment `{0}`")]
    UnknownEnvironment(String),
    #[error("unknown parameter `{param}` for environment `{env}`")]
    UnknownEnvParameter { env: String, param: String },
    #[error("environment step produced a non-finite state at step {step}: {state:?}")]
    EnvDiverged { step: usize, state: Vec<f64> },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = PddmError> = std::result::Result<T, E>;
