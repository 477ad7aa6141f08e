//! Batch orchestration: configuration, subcommands and run manifests.

pub mod commands;
pub mod config;
pub mod fuzzing;
pub mod manifest;

pub use commands::{run_command, Command, Options, Outcome};
pub use config::{parse_config, ExperimentConfig};
pub use manifest::RunManifest;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] sausage_core::Error),
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
}

impl LabError {
    /// Process exit code: 2 for invalid input, 3 for a resource limit,
    /// 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use sausage_core::Error as E;
        match self {
            LabError::Config(_) | LabError::Core(E::InvalidParameter(_)) | LabError::Core(E::Parse { .. }) => 2,
            LabError::Core(E::ResourceLimit { .. }) => 3,
            _ => 1,
        }
    }
}
