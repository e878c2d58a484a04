use std::io;
use std::path::PathBuf;

use pddm_core::PddmError;

/// Exit code for malformed or inconsistent inputs.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for failures while a run is executing.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Core(#[from] PddmError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => EXIT_CONFIG,
            HarnessError::Core(
                PddmError::InvalidArchitecture(_)
                | PddmError::InvalidConfig(_)
                | PddmError::UnknownEnvironment(_)
                | PddmError::UnknownEnvParameter { .. }
                | PddmError::VersionMismatch(_)
                | PddmError::Truncated(_)
                | PddmError::DimensionMismatch(_),
            ) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
