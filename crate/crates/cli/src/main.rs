//! `collatekit` command-line entry point.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use collatekit::error::ErrorKind;
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "collatekit", version, about = "Retrieval evaluation, negative collation and batch planning")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Seed for every randomized step [default: 7; train falls back to the config's seed].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Primary output file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Manifest path (default: `<primary output>.manifest.json`).
    #[arg(long, global = true)]
    pub manifest_out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank@1 evaluation of an embedding file against a dataset.
    Eval(EvalArgs),
    /// Positive ranks plus soft and hard negatives for every query.
    Collate(CollateArgs),
    /// Positive-balanced batch plan written as a JSONL batch file.
    Plan(PlanArgs),
    /// Toy InfoNCE training on a batch file.
    Train(TrainArgs),
    /// Token reduction of ERM text over plain text.
    MeasureContext(MeasureArgs),
    /// Schema check of an entity relationship map.
    ValidateErm(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    Full,
    Batch,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, value_enum, default_value_t = ScopeArg::Full)]
    pub scope: ScopeArg,
    /// Required with `--scope batch`.
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CollateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value_t = collatekit::collation::DEFAULT_K_SOFT)]
    pub k_soft: usize,
    #[arg(long, default_value_t = collatekit::collation::DEFAULT_K_HARD)]
    pub k_hard: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSizeArg {
    Min,
    Fixed(usize),
}

fn parse_batch_size(s: &str) -> Result<BatchSizeArg, String> {
    if s == "min" {
        return Ok(BatchSizeArg::Min);
    }
    s.parse::<usize>()
        .map(BatchSizeArg::Fixed)
        .map_err(|_| format!("expected a positive integer or `min`, got `{s}`"))
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub collation: PathBuf,
    /// Batch size, or `min` for the smallest size that gives every batch a rank-0 query.
    #[arg(long, value_parser = parse_batch_size)]
    pub batch_size: BatchSizeArg,
    /// Dataset used to check positives and negatives against the corpus.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Also write the batch plan summary as JSON.
    #[arg(long)]
    pub plan_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub batches: PathBuf,
    /// JSONL input features for every training and validation id.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub val_dataset: PathBuf,
    /// Trainer config JSON; omitted fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub trace_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// JSONL with `plain` and `erm` text fields and an optional `id`.
    #[arg(long)]
    pub pairs: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub file: PathBuf,
}

/// Exit status when an ERM document fails validation.
pub const EXIT_INVALID_DOCUMENT: u8 = 12;

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Io => 3,
        ErrorKind::Parse => 4,
        ErrorKind::Dataset => 5,
        ErrorKind::Embedding => 6,
        ErrorKind::Similarity => 7,
        ErrorKind::Collation => 8,
        ErrorKind::Planning => 9,
        ErrorKind::Training => 10,
        ErrorKind::Config => 11,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = exit_code(e.kind());
            let report = json!({
                "error": {
                    "kind": format!("{:?}", e.kind()).to_lowercase(),
                    "message": e.to_string(),
                    "exit_code": code,
                }
            });
            eprintln!("{report}");
            ExitCode::from(code)
        }
    }
}
