//! `ghzmetro`: parameter scans, certificates and figure data for
//! GHZ-diagonal metrology states.
//!
//! Exit codes: 0 success, 2 domain error, 3 size limit, 4 failed cross-check.

mod commands;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::output::{emit, Format, Provenance};

#[derive(Parser, Debug)]
#[command(name = "ghzmetro", version, about = "Fisher information, PPT and Bell-bound tools for GHZ-diagonal states")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, value_enum, default_value = "csv", global = true)]
    pub format: Format,
    /// Write to a file instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Print rationals as p/q instead of decimals.
    #[arg(long, global = true)]
    pub exact: bool,
    /// Run the dense cross-checks and report their deviation.
    #[arg(long, global = true)]
    pub oracle: bool,
    /// Leave the timestamp out of the provenance header.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

/// State selection shared by most subcommands.
#[derive(Args, Debug, Clone)]
pub struct StateArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long, required_unless_present = "ghz")]
    pub k: Option<u32>,
    /// Extra mixed levels of the `rho_{n,k,m}` family.
    #[arg(long, default_value_t = 0)]
    pub m: u32,
    /// Use the pure GHZ state instead of the family.
    #[arg(long, conflicts_with_all = ["k", "m"])]
    pub ghz: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalue table, normalization and sector counts.
    State(StateArgs),
    /// Quantum Fisher information with its bounds.
    Qfi(commands::QfiArgs),
    /// Partial-transpose classification across qubit cuts.
    Ppt(commands::PptArgs),
    /// Correlation-tensor norm and the QFI/Bell comparison.
    Bell(commands::BellArgs),
    /// Seeded Monte Carlo phase estimation.
    Estimate(commands::EstimateArgs),
    /// Regenerate figure data (ids 2, 3, 4) as a table.
    Figure(commands::FigureArgs),
}

/// Failures mapped onto the documented exit codes.
#[derive(Debug)]
pub enum Failure {
    Lib(ghzmetro::Error),
    Usage(String),
    CrossCheck(String),
    Io(io::Error),
}

impl From<ghzmetro::Error> for Failure {
    fn from(e: ghzmetro::Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        use ghzmetro::Error as E;
        match self {
            Failure::Lib(E::SizeLimit { .. }) => 3,
            Failure::Lib(E::Spectral(_)) | Failure::CrossCheck(_) => 4,
            Failure::Lib(_) | Failure::Usage(_) => 2,
            Failure::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::CrossCheck(m) => write!(f, "cross-check failed: {m}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

fn command_line() -> String {
    std::iter::once("ghzmetro".to_string()).chain(std::env::args().skip(1)).collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = &cli.common;
    let outcome = match &cli.command {
        Command::State(a) => commands::state(a, common),
        Command::Qfi(a) => commands::qfi(a, common),
        Command::Ppt(a) => commands::ppt(a, common),
        Command::Bell(a) => commands::bell(a, common),
        Command::Estimate(a) => commands::estimate(a, common),
        Command::Figure(a) => commands::figure(a, common),
    }?;
    let prov = Provenance::new(command_line(), outcome.seed, common.exact, !common.no_timestamp);
    let mut sink: Box<dyn Write> = match &common.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    emit(&mut *sink, common.format, common.exact, &prov, &outcome.report)?;
    sink.flush()?;
    match outcome.cross_check_failure {
        Some(msg) => Err(Failure::CrossCheck(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ghzmetro: {e}");
            ExitCode::from(e.code())
        }
    }
}
