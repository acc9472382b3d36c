use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod manifest;

use commands::{Outcome, SolverFailed};

#[derive(Debug, Parser)]
#[command(
    name = "cablelife",
    version,
    about = "Space charge, field and life assessment of HVDC cable insulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `[run] seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `[run] nodes`.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "cablelife-out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reproduce the 90-kV validation cable and compare peak fields with the references.
    Validate(CommonArgs),
    /// Simulate the configured load program with the selected field models.
    Simulate(CommonArgs),
    /// Identify transport parameters from PEA measurements.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Overrides `[fit] starts`.
        #[arg(long)]
        starts: Option<usize>,
    },
    /// Estimate the loss of life caused by the Type Test program.
    Life(CommonArgs),
    /// Compare the microscopic and macroscopic models on the configured cycle.
    Compare(CommonArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<SolverFailed>().is_some() {
            return 3;
        }
        if let Some(cablelife_core::Error::SolverFailure { .. }) = cause.downcast_ref::<cablelife_core::Error>() {
            return 3;
        }
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Validate(a) => commands::validate(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Fit { common, starts } => commands::fit(&common, starts),
        Command::Life(a) => commands::life(&a),
        Command::Compare(a) => commands::compare(&a),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Deviation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
