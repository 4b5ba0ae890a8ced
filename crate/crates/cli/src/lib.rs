//! Command-line front end for `collapse-lab`.
//!
//! Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 some
//! trajectories failed to collapse (outputs are still written).

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::commands::{HistogramArgs, MartingaleArgs};
use crate::config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_COLLAPSE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] collapse_lab::Error),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Collapse(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Model(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Collapse(_) => EXIT_COLLAPSE,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "collapse-lab",
    version,
    about = "Stochastic reduction vs. projective measurement for two spins"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the total-spin experiment and compare with projective measurement.
    Discriminate(RunConfig),
    /// Ensemble mean and variance of the energy over time.
    Martingale(MartingaleArgs),
    /// Equal-area histogram of energy-zero outcomes on the sphere.
    Histogram(HistogramArgs),
}

/// Number of trajectories whose failure to collapse the run reported.
pub struct RunSummary {
    pub failed: usize,
}

pub fn execute(cli: Cli) -> Result<RunSummary, CliError> {
    match cli.command {
        Command::Discriminate(config) => commands::cmd_discriminate(&config),
        Command::Martingale(args) => commands::cmd_martingale(&args),
        Command::Histogram(args) => commands::cmd_histogram(&args),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(summary) if summary.failed > 0 => {
            eprintln!(
                "error: {} trajectories failed to collapse and were excluded",
                summary.failed
            );
            EXIT_COLLAPSE
        }
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
