mod analytic;
mod pde;
mod stochastic;

use std::path::Path;

use hjb_core::HjbError;

use crate::config::{Command, RunConfig};
use crate::summary::{Report, RunSummary};
use crate::{solver_exit_code, CliError};

/// Why a command stopped before finishing its checks.
pub(crate) enum Stop {
    Cli(CliError),
    Solver(HjbError),
}

impl From<CliError> for Stop {
    fn from(e: CliError) -> Self {
        Stop::Cli(e)
    }
}

impl From<HjbError> for Stop {
    fn from(e: HjbError) -> Self {
        Stop::Solver(e)
    }
}

pub(crate) type Outcome = Result<(), Stop>;

pub(crate) fn execute(config: &RunConfig, command: Command, out: &Path) -> Result<RunSummary, CliError> {
    let mut report = Report::default();
    let outcome = match command {
        Command::Exact => analytic::exact(&config.exact, &mut report),
        Command::Regime => analytic::regime(&config.regime, config.seed, out, &mut report),
        Command::Radial => pde::radial(&config.radial, out, &mut report),
        Command::Monotone => pde::monotone(&config.monotone, out, &mut report),
        Command::Grid2d => pde::grid2d(&config.grid2d, out, &mut report),
        Command::Simulate => stochastic::simulate(&config.simulate, config.seed, out, &mut report),
        Command::Verify => stochastic::verify(&config.verify, config.seed, out, &mut report),
        Command::All => unreachable!("the suite is expanded by the caller"),
    };
    match outcome {
        Ok(()) => Ok(report.finish(command, None)),
        Err(Stop::Solver(e)) => {
            let code = solver_exit_code(&e);
            Ok(report.finish(command, Some((e.to_string(), code))))
        }
        Err(Stop::Cli(e)) => Err(e),
    }
}

/// `count` evenly spaced points on `[lo, hi]`.
pub(crate) fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

pub(crate) fn sci(v: f64) -> String {
    format!("{v:.3e}")
}
