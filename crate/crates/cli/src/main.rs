mod commands;
mod config;
mod seqfile;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Knobs;

/// Exit 2: malformed input. Exit 3: solver or Monte Carlo failure.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Failure(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Failure(_) | CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Failure(m) => write!(f, "computation failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<disklab::Error> for CliError {
    fn from(e: disklab::Error) -> Self {
        use disklab::Error::*;
        match e {
            OutsideDisk { .. }
            | InvalidArgument(_)
            | DuplicateZero(..)
            | CommonZero(_)
            | Oversize(..)
            | Precondition(_)
            | StartOnBoundary
            | OverlappingHoles(..) => CliError::Input(e.to_string()),
            RadiusUnderflow(_) | DegenerateConstraints(..) | Infeasible | PivotLimit(_) | Censored { .. }
            | NoBracket { .. } => CliError::Failure(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "disklab",
    version,
    about = "Harmonic majorants, Blaschke products and harmonic measure in the unit disk",
    after_help = "Exit codes: 0 success, 2 malformed input, 3 solver or Monte Carlo failure.\n\
                  DISKLAB_THREADS caps the number of worker threads.\n\
                  Config files hold flat `key = value` pairs named like the flags \
                  (underscores for dashes); flags win."
)]
struct Cli {
    /// Flat key-value config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a zero sequence (geometric, two-ray, close-pairs, perturbed) as JSON
    Generate,
    /// Run the four interpolation checkers on a sequence file
    CheckInterpolating {
        input: Option<PathBuf>,
    },
    /// Single-hole harmonic measure, or condition (d) on a sequence file
    HarmonicMeasure {
        input: Option<PathBuf>,
    },
    /// Corona, condition (c) and f² membership costs for a pair of products
    IdealCosts,
    /// The radial stable-rank counterexample
    #[command(after_help = "CSV columns (with --csv): n,lambda,log_one_minus_mu,q,parity")]
    Counterexample,
    /// Split a nondecreasing product of factors below a threshold
    SplitProduct,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("DISKLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("DISKLAB_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Failure(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let knobs = match &cli.config {
        Some(path) => Knobs::from_file(path)?.overlay(&cli.knobs),
        None => cli.knobs.clone(),
    };
    let report = match cli.command {
        Command::Generate => commands::generate(&knobs)?,
        Command::CheckInterpolating { input } => commands::check_interpolating(&knobs, input)?,
        Command::HarmonicMeasure { input } => commands::harmonic_measure(&knobs, input)?,
        Command::IdealCosts => commands::ideal_costs(&knobs)?,
        Command::Counterexample => commands::counterexample(&knobs)?,
        Command::SplitProduct => commands::split(&knobs)?,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match &knobs.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("disklab: {e}");
            ExitCode::from(e.code())
        }
    }
}
