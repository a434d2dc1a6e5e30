//! Config-driven command-line front end for the two-level laser toolkit.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime or budget
//! error, 3 comparison failure under `--strict`.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "twolevel-laser",
    about = "Closed-form results and stochastic-ensemble checks for a pumped two-level laser",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// Configuration file (flat `key = value` lines).
    #[arg(long)]
    config: std::path::PathBuf,
    /// Override one configuration key, e.g. `--set kappa=0.8`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Write the result here instead of stdout.
    #[arg(long)]
    output: Option<std::path::PathBuf>,
    /// Output format; reports default to json, curves to csv.
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Override the base RNG seed (same as `--set seed=N`).
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with code 3 if any comparison verdict fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form steady-state report for one parameter set.
    Analytic(CommonArgs),
    /// Closed-form power spectrum sampled on a frequency grid.
    Spectrum(CommonArgs),
    /// Band fraction z and in-band photon number per half-width.
    Bandfraction(CommonArgs),
    /// Run the stochastic ensemble and compare against the closed forms.
    Simulate(CommonArgs),
    /// Population dynamics: closed-form rate equation and jump process.
    Populations(CommonArgs),
    /// Alias of simulate, for verdict-gated comparison runs.
    Compare(CommonArgs),
}

/// Failure category, mapped onto the documented exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
    ComparisonFailed,
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Runtime(_) => ExitCode::from(2),
            CliError::ComparisonFailed => ExitCode::from(3),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analytic(args) => commands::run_analytic(args),
        Command::Spectrum(args) => commands::run_spectrum(args),
        Command::Bandfraction(args) => commands::run_bandfraction(args),
        Command::Simulate(args) => commands::run_simulate(args, "simulate"),
        Command::Populations(args) => commands::run_populations(args),
        Command::Compare(args) => commands::run_simulate(args, "compare"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            match &err {
                CliError::Config(msg) => eprintln!("configuration error: {msg}"),
                CliError::Runtime(msg) => eprintln!("runtime error: {msg}"),
                CliError::ComparisonFailed => eprintln!("comparison failed in strict mode"),
            }
            err.exit_code()
        }
    }
}
