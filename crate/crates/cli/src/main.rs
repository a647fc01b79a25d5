mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ssp_mdrk::par::init_workers;
use ssp_mdrk::Execution;

use commands::Context;
use error::{CliError, EXIT_USAGE};

/// Experiments with SSP implicit two-derivative and IMEX multi-derivative
/// Runge-Kutta methods.
///
/// Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.
#[derive(Debug, Parser)]
#[command(name = "ssp-mdrk", version)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for output artifacts.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    /// Seed recorded in the manifest of every artifact.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print sign and order-condition reports for the built-in methods and
    /// an optional tableau file.
    VerifyTableaus {
        /// Tableau file to check alongside the built-ins.
        file: Option<PathBuf>,
    },
    /// Integrate one problem with one method and write states and monitors.
    Run,
    /// Temporal or grid convergence study.
    Convergence,
    /// Distance to the explicit limit scheme as eps shrinks.
    ApCheck,
    /// IMEX methods against an explicit reference on the mixed-regime BGK setup.
    MixedRegime,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let execution = match cli.jobs {
        Some(1) => Execution::Sequential,
        Some(n) => {
            init_workers(n as usize);
            Execution::default()
        }
        None => Execution::default(),
    };
    let ctx = Context {
        config: cli.config,
        out: cli.out,
        execution,
        seed: cli.seed,
    };
    match cli.command {
        Command::VerifyTableaus { file } => commands::verify_tableaus(file.as_deref()),
        Command::Run => commands::run(&ctx),
        Command::Convergence => commands::convergence(&ctx),
        Command::ApCheck => commands::ap_check(&ctx),
        Command::MixedRegime => commands::mixed_regime(&ctx),
    }
}
