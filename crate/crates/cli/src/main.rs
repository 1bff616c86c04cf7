//! `splitree`: analytic tables, single simulations, validation suites and
//! parameter scans for splitting trees with neutral mutations.

mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand};

use commands::{AnalyticArgs, ScanArgs, SimulateArgs, Status, ValidateArgs};
use config::ConfigError;

#[derive(Debug, Parser)]
#[command(name = "splitree", version, about = "Splitting trees with neutral mutations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expected spectrum, tail and old-family tables.
    Analytic(AnalyticArgs),
    /// One simulated tree with its allelic statistics.
    Simulate(SimulateArgs),
    /// Monte-Carlo validation suites; exits with 1 if a test fails.
    Validate(ValidateArgs),
    /// Analytic summaries across values of one parameter.
    Scan(ScanArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analytic(a) => commands::analytic(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Validate(a) => commands::validate(a),
        Command::Scan(a) => commands::scan(a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::TestsFailed) => ExitCode::from(1),
        Err(e) => match e.downcast_ref::<ConfigError>() {
            Some(c) => {
                let kind = match c {
                    ConfigError::Missing(_) => ErrorKind::MissingRequiredArgument,
                    ConfigError::Invalid(_) => ErrorKind::ValueValidation,
                    ConfigError::File(_) => ErrorKind::InvalidValue,
                };
                Cli::command().error(kind, c).exit()
            }
            None => {
                eprintln!("error: {e:#}");
                ExitCode::from(3)
            }
        },
    }
}
