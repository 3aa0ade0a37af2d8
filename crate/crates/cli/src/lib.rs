//! Command-line runner for the `hjb-core` solvers.
//!
//! A run reads a [`RunConfig`], executes one command (or the whole suite with
//! `all`), writes CSV artifacts and a `summary.txt` of `key=value` lines into
//! the output directory, and reports an exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | all built-in checks passed |
//! | 1 | invalid configuration (including I/O problems with the output) |
//! | 2 | a solver did not converge |
//! | 3 | a built-in check (residual, ordering, z-score, ...) failed |

mod commands;
pub mod config;
mod output;
mod summary;

use std::path::{Path, PathBuf};

use hjb_core::HjbError;
use thiserror::Error;

pub use config::{Command, RunConfig};
pub use summary::{Check, RunSummary, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_CONFIG: i32 = 1;
pub const EXIT_NON_CONVERGENCE: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

/// Errors that stop a run before it can produce a summary.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_INVALID_CONFIG
    }
}

/// Exit code for a solver error raised while a command runs.
pub fn solver_exit_code(err: &HjbError) -> i32 {
    match err {
        HjbError::NonConvergence { .. } | HjbError::Stiff { .. } | HjbError::Singular(_) | HjbError::Branch(_) => {
            EXIT_NON_CONVERGENCE
        }
        HjbError::Domain(_)
        | HjbError::InvalidArgument(_)
        | HjbError::Precondition(_)
        | HjbError::Truncation { .. } => EXIT_INVALID_CONFIG,
        HjbError::InsufficientData(_) => EXIT_CHECK_FAILED,
    }
}

/// Runs `config.command` into `config.output`.
///
/// Configuration and output errors are returned as `Err`; solver failures and
/// failed checks are reported through the summary's status and exit code.
pub fn run(config: &RunConfig) -> Result<RunSummary, CliError> {
    let command = config.command.ok_or_else(|| CliError::Config("no command given".into()))?;
    let output = config.output.clone().ok_or_else(|| CliError::Config("no output directory given".into()))?;
    config.validate(command)?;
    if command == Command::All {
        run_suite(config, &output)
    } else {
        run_one(config, command, &output)
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })
}

fn run_one(config: &RunConfig, command: Command, output: &Path) -> Result<RunSummary, CliError> {
    create_dir(output)?;
    let summary = commands::execute(config, command, output)?;
    summary.write(&output.join("summary.txt"), config.seed)?;
    Ok(summary)
}

fn run_suite(config: &RunConfig, output: &Path) -> Result<RunSummary, CliError> {
    create_dir(output)?;
    let mut children = Vec::new();
    for command in Command::SUITE {
        children.push(run_one(config, command, &output.join(command.name()))?);
    }
    let summary = RunSummary::aggregate(children);
    summary.write(&output.join("summary.txt"), config.seed)?;
    Ok(summary)
}
