//! The `defectlab` command-line front end, as a library so tests can drive it.

pub mod config;
pub mod output;
pub mod simulate;
pub mod tmatrix;
pub mod verify;

use std::path::Path;

use config::{Command, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid {field}: {msg}")]
    Usage { field: String, msg: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("threshold exceeded: {0}")]
    Threshold(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        }
    }

    /// 1 usage, 2 numerical or IO, 3 a verify threshold.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } => 1,
            CliError::Numerical(_) | CliError::Io { .. } => 2,
            CliError::Threshold(_) => 3,
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    match cfg.command()? {
        Command::Simulate => simulate::simulate(cfg),
        Command::Scatter => simulate::scatter(cfg),
        Command::Tmatrix => tmatrix::tmatrix(cfg),
        Command::Verify => verify::verify(cfg),
    }
}
