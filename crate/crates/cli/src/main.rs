//! `safe-embed`: run and check scenarios, linearize and synthesize from
//! JSON configs.
//!
//! Exit status: 0 all assertions pass, 1 an assertion failed or was
//! degenerate, 2 bad arguments or config, 3 numerical or i/o failure.

mod commands;
mod config;
mod system;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use safe_embed::scenarios::Verdict;
use safe_embed::Error;

#[derive(Parser)]
#[command(name = "safe-embed", version, about = "Barrier-state embedding: scenarios, linearization and gain synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario or inline system and write trajectories plus a report.
    Run(Flags),
    /// Like `run`; with neither --scenario nor --config, runs every scenario.
    Check(Flags),
    /// Write the gain, closed-loop spectrum and (Ā, B̄) for a scenario or config.
    Synthesize(Flags),
    /// Write (Ā, B̄) at the equilibrium with the finite-difference gap.
    Linearize(Flags),
}

#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// Scenario id: linear_safe, input_constrained, acc_pidb, acc_is3, robots, issf_case.
    #[arg(long)]
    pub scenario: Option<String>,
    /// JSON run config (scenario overrides or an inline system).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output root [default: config "out", then $SAFE_EMBED_OUT, then ./out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed of the disturbance streams [default: config "seed", then 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Integration step, overriding the scenario or config value.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Simulated time, overriding the scenario or config value.
    #[arg(long)]
    pub horizon: Option<f64>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) => CliError::Config(msg),
            Error::Io(msg) => CliError::Io(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(f) => commands::cmd_run(f),
        Command::Check(f) => commands::cmd_check(f),
        Command::Synthesize(f) => commands::cmd_synthesize(f),
        Command::Linearize(f) => commands::cmd_linearize(f),
    };
    match result {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(3)
        }
    }
}
