//! Command-line runs of `qsuppress-core`: verification suites, noise
//! sweeps, single optimizations and Monte-Carlo cross-checks, plus the JSON
//! protocol format and the run configuration schema.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod verify;

pub use config::{RunConfig, Settings};
pub use error::CliError;
