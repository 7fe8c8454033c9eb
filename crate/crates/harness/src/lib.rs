//! Driver library for the `umbilic-lab` binary: configuration ingestion,
//! identity batteries, stability sweeps, flow runs, and report emission on
//! top of `umbilic-core`.
//!
//! Outcomes map to a fixed exit-code contract:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | run completed, all checked thresholds held |
//! | 1    | run completed, some threshold was violated |
//! | 2    | configuration or CLI error |
//! | 3    | numerical failure (precondition, degeneracy, divergence) |

use std::fmt;

pub mod config;
pub mod execute;
pub mod identities;
pub mod report;
pub mod surfaces;
pub mod sweep;
pub mod thresholds;

pub use config::{Command, FileConfig, Plan};
pub use execute::{execute, init_thread_pool};

/// Failures that abort a run (threshold violations do not: they are
/// reported and mapped to exit code 1 by [`execute`]).
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or CLI usage (exit code 2).
    Config(config::ConfigError),
    /// The numerics could not complete (exit code 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e)
    }
}
