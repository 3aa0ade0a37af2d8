use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use hjb_cli::{run, Command, RunConfig, EXIT_INVALID_CONFIG};

/// Solvers and checks for the quadratic-growth HJB equation.
#[derive(Debug, Parser)]
#[command(name = "hjb", version)]
struct Args {
    /// Command to run; falls back to `command` in the config file.
    #[arg(value_enum)]
    command: Option<Command>,
    /// TOML configuration file; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Random seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INVALID_CONFIG as u8),
            };
        }
    };
    let loaded = match &args.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    };
    let mut config = match loaded {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if args.command.is_some() {
        config.command = args.command;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.output.is_some() {
        config.output = args.output;
    }
    if config.output.is_none() {
        config.output = Some(PathBuf::from("out"));
    }
    match run(&config) {
        Ok(summary) => {
            if !args.quiet || summary.exit_code != 0 {
                print!("{}", summary.render());
            }
            ExitCode::from(summary.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
