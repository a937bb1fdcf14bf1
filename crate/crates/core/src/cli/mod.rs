//! Command-line front end: config ingestion, the full pipeline, table
//! reproduction and the verification suites.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use commands::{format_real, rational_approx, solve_job, Solved};
pub use config::{parse_real, Depth, Format, JobConfig, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("degenerate regime: {0}")]
    Degenerate(String),
    #[error("spectrum exhausted: {0}")]
    Exhausted(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) | CliError::Numerical(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Exhausted(_) => 4,
            CliError::Verification(_) => 5,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "selfsim",
    version,
    about = "Eigenvalues of clamped problems with self-similar weights"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON job configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Refinement depth (integer or "auto"); overrides the config.
    #[arg(long, global = true)]
    pub depth: Option<Depth>,
    /// Number of positive eigenvalues.
    #[arg(long, global = true)]
    pub pos: Option<usize>,
    /// Number of negative eigenvalues.
    #[arg(long, global = true)]
    pub neg: Option<usize>,
    /// Relative bisection tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Proceed on a degenerate regime.
    #[arg(long, global = true)]
    pub force: bool,
    /// Seed for the randomized suites.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Jump structure, regime and spectral ratio.
    Analyze,
    /// Eigenvalues with normalized values.
    Solve,
    /// Limit coefficients and geometric ratios.
    Asympt,
    /// Recompute a published table and compare.
    ReproduceTable {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        id: u8,
    },
    /// Run a randomized property suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Oracle,
    Lemmas,
    Inertia,
    Equivalence,
}

/// Parses `args` and runs the command. Results go to `out` unless the config
/// names an output file; progress notes go to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Invalid(e.to_string()))?;
    commands::dispatch(&cli, out, err)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    commands::dispatch(cli, &mut stdout.lock(), &mut stderr.lock())
}
