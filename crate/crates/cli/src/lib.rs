//! Batch front-end: TOML configuration and subcommand dispatch.

pub mod commands;
pub mod config;

pub use commands::{dispatch, CliError, Subcommand};
pub use config::{parse_config, ConfigError, RunConfig};
