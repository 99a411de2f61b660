//! Command-line front end: fit patch models, explain images, visualize
//! hidden units and compute sensitivity baselines.

pub mod args;
pub mod commands;
pub mod error;
pub mod outputs;
pub mod run_config;

pub use error::{CliError, CliResult};
pub use run_config::{ClassChoice, RunConfig, SourceSpec};
