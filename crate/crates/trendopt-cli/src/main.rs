//! Command-line front end: experiment runs, damping/learning-rate grid
//! search, and the oracle verification suite.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error (including
//! verification failures). `TRENDOPT_THREADS` caps the worker pool.

mod config;
mod grid;
mod output;
mod run;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "trendopt", version, about = "Trend-corrected optimizer benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment and write curve, difference and
    /// aggregate files.
    Run(run::RunArgs),
    /// Enumerate the (eta, phi) grid with reduced-epoch probes and report
    /// the best cell per optimizer.
    Grid(grid::GridArgs),
    /// Run the oracle verification suite; prints one PASS/FAIL line per
    /// property.
    Verify(verify::VerifyArgs),
}

/// Errors split by exit code: configuration problems exit 1, everything
/// else exits 2.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn runtime(err: impl std::fmt::Display) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<trendopt::Error> for CliError {
    fn from(err: trendopt::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

fn init_thread_pool() -> Result<(), CliError> {
    match std::env::var("TRENDOPT_THREADS") {
        Ok(raw) => {
            let threads: usize = raw.parse().map_err(|_| {
                CliError::Config(format!(
                    "TRENDOPT_THREADS must be a positive integer, got {raw:?}"
                ))
            })?;
            if threads == 0 {
                return Err(CliError::Config(
                    "TRENDOPT_THREADS must be a positive integer".into(),
                ));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(CliError::runtime)
        }
        Err(_) => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    let outcome = init_thread_pool().and_then(|_| match cli.command {
        Command::Run(args) => run::cmd_run(args),
        Command::Grid(args) => grid::cmd_grid(args),
        Command::Verify(args) => verify::cmd_verify(args),
    });

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(message)) => {
            eprintln!("config error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
