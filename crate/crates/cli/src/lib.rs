//! Batch front end: `validate`, `resolvent`, `solve`, `verify`, `factorize`
//! and `signature` on JSON instance and function files.
//!
//! Every run produces a [`Report`]; with fixed inputs and seed the report is
//! byte-identical across runs. Exit codes: 0 success, 1 validation failure,
//! 2 numerical failure, 3 parse error.

mod commands;
mod parse;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use parse::{parse_complex, parse_points, PointSpec};
pub use report::{InputRecord, Kind, Report, Settings};

pub const DEFAULT_GRID: usize = 2048;

#[derive(Parser, Debug)]
#[command(name = "aip", version, about = "Indefinite abstract interpolation: validate data, build W(λ), solve and verify")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Circle grid size for boundary computations.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Override the tolerance of the hard checks.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for all randomized sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the JSON report to this path.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Print the JSON report instead of the text summary.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the data assumptions.
    Validate { file: PathBuf },
    /// Tabulate W(λ) and the residual of its kernel identity.
    Resolvent {
        file: PathBuf,
        /// Comma-separated points (`0.3-0.2i`), or a positive integer count of
        /// sample points; a lone `0` is the origin.
        #[arg(long, allow_hyphen_values = true)]
        points: Option<String>,
    },
    /// Apply the linear fractional map to a parameter and verify the result.
    Solve {
        file: PathBuf,
        /// Parameter file, or a complex constant placed on the diagonal.
        #[arg(long, allow_hyphen_values = true)]
        epsilon: Option<String>,
        /// Points at which to tabulate the solution.
        #[arg(long, allow_hyphen_values = true)]
        points: Option<String>,
    },
    /// Verify an externally supplied solution.
    Verify {
        file: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Kreĭn–Langer factorization of a function file.
    Factorize { file: PathBuf },
    /// Negative squares of the Schur kernel of a function file, or of the
    /// kernel of W for an instance file.
    Signature { file: PathBuf },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Resolvent { .. } => "resolvent",
            Command::Solve { .. } => "solve",
            Command::Verify { .. } => "verify",
            Command::Factorize { .. } => "factorize",
            Command::Signature { .. } => "signature",
        }
    }
}

/// Runs one command and returns its report; nothing is printed.
pub fn execute(cli: &Cli) -> Report {
    commands::execute(cli)
}

/// Parses arguments, runs, prints and writes the report. Returns the exit code.
pub fn run_from<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { report::EXIT_PARSE } else { 0 };
        }
    };
    let report = execute(&cli);
    let text = report.to_json();
    if let Some(path) = &cli.report {
        if let Err(e) = std::fs::write(path, &text) {
            eprintln!("cannot write report {}: {e}", path.display());
            return report::EXIT_PARSE;
        }
    }
    if cli.json {
        print!("{text}");
    } else {
        print!("{}", report.to_text());
    }
    report.exit_code
}
