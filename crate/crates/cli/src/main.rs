//! `pctadw`: validate datasets, train embeddings and evaluate node vectors.
//!
//! Exit codes: 0 success, 1 validation or evaluation failure, 2 usage error.

mod evaluate;
mod manifest;
mod train;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Default dataset directory when none is given on the command line.
pub const DATASET_ENV: &str = "PCTADW_DATASET";

#[derive(Debug, Parser)]
#[command(
    name = "pctadw",
    version,
    about = "Directed text-network embeddings: train and evaluate"
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a dataset, print its counts and any dependency cycles.
    Validate(validate::ValidateArgs),
    /// Train node embeddings and write checkpoint, loss log, vectors and manifest.
    Train(train::TrainArgs),
    /// One-vs-rest logistic regression micro-F1 per training fraction.
    Classify(evaluate::ClassifyArgs),
    /// Rank analogy queries built from node pairs.
    Analogy(evaluate::AnalogyArgs),
    /// Write text-format vectors and a PCA projection.
    Export(evaluate::ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArg {
    /// Dataset directory holding edges.tsv, docs.tsv and labels.tsv.
    #[arg(long = "dataset", env = DATASET_ENV)]
    pub dir: Option<PathBuf>,
}

/// A failure mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Failure(e.into())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn usage<T>(message: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(message.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Validate(args) => validate::run(args),
        Command::Train(args) => train::run(args),
        Command::Classify(args) => evaluate::classify(args),
        Command::Analogy(args) => evaluate::analogy(args),
        Command::Export(args) => evaluate::export(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
