//! `sirgame`: scenario-driven front end for the equilibrium solver.
//!
//! Exit status: 0 on success, 1 on usage or input errors, 2 when a solve or
//! check misses its tolerance (outputs are still written).

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "sirgame",
    version,
    about = "Nash equilibria of a social-distancing SIR game"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Directory receiving all output files.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Seed of the quasi-random start points.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Absolute tolerance on the gap H (and on NCP residuals in `verify`).
    #[arg(long, global = true, default_value_t = sirgame::equilibrium::DEFAULT_TOL)]
    pub tol: f64,
    /// Number of local-search starts.
    #[arg(long, global = true, default_value_t = 8)]
    pub starts: usize,
    /// Override the scenario's ODE substeps per decision interval.
    #[arg(long, global = true)]
    pub substeps: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the dynamics for the chain profile of a fraction vector.
    Simulate(commands::SimulateArgs),
    /// Best response to aggregates read from CSV.
    BestResponse(commands::BestResponseArgs),
    /// Compute an equilibrium by multi-start local search.
    Solve,
    /// Re-check a saved equilibrium against the full complementarity problem.
    Verify(commands::VerifyArgs),
    /// Solve once per maximum action and tabulate costs.
    SweepUm(commands::SweepArgs),
}

/// Result of a subcommand that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ToleranceMiss,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let usage = err.use_stderr();
            // Help and version requests print to stdout and succeed.
            let _ = err.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Simulate(args) => commands::simulate(&cli.global, args),
        Command::BestResponse(args) => commands::best_response(&cli.global, args),
        Command::Solve => commands::solve(&cli.global),
        Command::Verify(args) => commands::verify(&cli.global, args),
        Command::SweepUm(args) => commands::sweep_um(&cli.global, args),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::ToleranceMiss) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
