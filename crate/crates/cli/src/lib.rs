//! Configuration, orchestration and persistence for the `afstab` binary.

pub mod commands;
pub mod config;
pub mod manifest;

pub use commands::{run, Command, RunError};
pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use manifest::RunManifest;
