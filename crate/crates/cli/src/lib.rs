//! Batch pipeline around the core library: configuration, file
//! formats, stage manifests, and the stage runners behind the CLI
//! subcommands.

pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod stages;
pub mod summary;

pub use config::PipelineConfig;
pub use error::{CliError, CliResult};
