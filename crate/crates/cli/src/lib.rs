//! Config-driven experiment harness for the `mmfe-core` solvers.
//!
//! Exit codes of the binary: 0 on success, 2 on a configuration error,
//! 3 when a solver exhausts its iteration cap (artifacts are still written),
//! 1 for anything else.

use std::path::Path;

pub mod artifacts;
pub mod compare;
pub mod config;
pub mod format;
pub mod plotdata;
pub mod run;

pub use config::{RunConfig, Solver, BUNDLED};
pub use run::{run, RunOutcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Solver(#[from] mmfe_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    pub fn csv(path: &Path, e: csv::Error) -> Self {
        Self::Input(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(mmfe_core::Error::InvalidConfig(_)) => 2,
            _ => 1,
        }
    }
}
