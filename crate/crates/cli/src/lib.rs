//! Command-line front-end for `lgqa`: JSON configuration, subcommands, CSV
//! output and run manifests.

pub mod config;
pub mod output;
pub mod run;

pub use config::{Config, ConfigError};
pub use run::{dispatch, execute, Cli, Command, RunError};
