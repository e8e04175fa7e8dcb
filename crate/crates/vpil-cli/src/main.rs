//! Command line front end: simulation runs, the linearized fixed-point
//! iteration, the analytic criteria, and potential-solver verification.
//!
//! Exit codes: 0 for a clean run, 1 for configuration errors, 2 for a run
//! that aborted after starting (partial outputs are flushed before exit).

mod analytic;
mod iterate;
mod outputs;
mod potential;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "vpil",
    version,
    about = "Numerical laboratory for the Vlasov-Poisson system with isotropic Landau collisions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a kinetic simulation, recording diagnostics and snapshots.
    Simulate(RunArgs),
    /// Run the linearized fixed-point iteration, one report per iterate.
    Iterate(RunArgs),
    /// Evaluate the cubic virial bound, the contraction fixed points, and
    /// the guaranteed existence time.
    Criterion(RunArgs),
    /// Cross-check the Newtonian potential solvers against closed forms.
    PotentialVerify(RunArgs),
}

#[derive(Args, Clone)]
pub struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed recorded in the run manifest.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Failure split by exit code: configuration problems exit 1, runs that
/// aborted after starting exit 2.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

pub fn config_err<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

pub fn runtime_err<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Iterate(args) => iterate::run(args),
        Command::Criterion(args) => analytic::run(args),
        Command::PotentialVerify(args) => potential::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
