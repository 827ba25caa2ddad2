//! Experiment runner behind the `usfm-sim` binary.

pub mod config;
pub mod output;
pub mod recipes;

use thiserror::Error;

pub use config::{parse_config, parse_str, ExperimentSpec, Overrides, Recipe};
pub use recipes::{run_experiment, RunSummary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("I/O failure: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<usfm_core::Error> for CliError {
    fn from(e: usfm_core::Error) -> Self {
        match e {
            usfm_core::Error::Numerical(m) => CliError::Numerical(m),
            other => CliError::Config(other.to_string()),
        }
    }
}
