//! `collatz-lab`: trajectories, identity checks, half-split tallies, seeded
//! coin-flip experiments, range sweeps and `an+b` cycle catalogs.
//!
//! Exit codes: 0 success, 1 usage, 2 step limit or inconclusive search,
//! 3 resource limit (a partial report is written when possible), 4 a
//! verification found a counterexample.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use collatz_lab::Natural;

mod commands;
mod config;
mod error;
mod output;

use commands::{anb_cycles, montecarlo, sweep, trajectory, verify};
use config::Format;
use error::EXIT_USAGE;

#[derive(Debug, Parser)]
#[command(name = "collatz-lab", version, about = "Exact and seeded experiments on 3n+1 and an+b maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print a trajectory with step kinds and exponents.
    Trajectory(trajectory::TrajectoryArgs),
    /// Run an exact identity check.
    #[command(subcommand)]
    Verify(verify::VerifyCommand),
    /// Seeded coin-flip experiment, or statistics of the embedded table.
    Montecarlo(montecarlo::MonteCarloArgs),
    /// Confirm that every start up to a limit reaches 1.
    Sweep(sweep::SweepArgs),
    /// Catalog the cycles reached from small odd starts.
    AnbCycles(anb_cycles::AnbCyclesArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write to a file instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn parse_natural(s: &str) -> Result<Natural, String> {
    s.parse::<Natural>()
        .map_err(|_| format!("`{s}` is not a non-negative integer"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Trajectory(args) => trajectory::run(args),
        Command::Verify(cmd) => verify::run(cmd),
        Command::Montecarlo(args) => montecarlo::run(args),
        Command::Sweep(args) => sweep::run(args),
        Command::AnbCycles(args) => anb_cycles::run(args),
    };
    match result {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
