//! `glosshift`: derive synthetic languages from corpora and analyze transfer.
//!
//! Exit codes: 0 on success, 1 on domain errors (bad data, refused
//! transformations), 2 on usage and I/O errors. Diagnostics go to stderr;
//! stdout carries `key=value` summaries.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Config;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "glosshift", version, about = "Derived-language construction and transfer analysis")]
struct Cli {
    /// TOML file with defaults; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (transforms are identical at any count; SGNS is only
    /// reproducible with 1).
    #[arg(long, global = true, env = "GLOSSHIFT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transform a one-sentence-per-line corpus.
    Transform(TransformArgs),
    /// Undo a transliteration with its map.
    Detranslit(DetranslitArgs),
    /// Build an (original, derived) pre-training pair.
    Mix(MixArgs),
    /// Train a shared BPE vocabulary.
    Bpe(BpeArgs),
    /// Sub-word type overlap between two corpora.
    Overlap(OverlapArgs),
    /// Estimate a dependent-ordering model from a CoNLL-U treebank.
    SyntaxEstimate(SyntaxEstimateArgs),
    /// Transform a downstream task dataset with its labels.
    Dataset(DatasetArgs),
    /// Train skip-gram embeddings.
    Sgns(SgnsArgs),
    /// Embedding alignment between original and derived tokens.
    Align(AlignArgs),
    /// Δsup / Δmono report from raw scores, optionally correlated with alignment.
    Report(ReportArgs),
}

/// Transformation and the resources its steps need.
#[derive(Debug, Args)]
pub struct TransformOpts {
    /// `inv`, `perm`, `translit`, `syn`, or a composition like `translit.perm`
    /// (rightmost applied first).
    #[arg(long)]
    pub kind: Option<String>,
    /// Required when the transformation is randomized.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Existing transliteration map to use.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Where to save a map built from the input (default: next to the output).
    #[arg(long)]
    pub map_out: Option<PathBuf>,
    /// Dependency parses, one per sentence, aligned with the input.
    #[arg(long)]
    pub conllu: Option<PathBuf>,
    /// Ordering model from `syntax-estimate`.
    #[arg(long)]
    pub ordering: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub opts: TransformOpts,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sentences per parallel batch.
    #[arg(long)]
    pub chunk: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DetranslitArgs {
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    #[command(flatten)]
    pub opts: TransformOpts,
    /// parallel, nonparallel_same or nonparallel_diff.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// The corpus to transform for nonparallel_diff.
    #[arg(long)]
    pub second: Option<PathBuf>,
    /// Receives original.txt, derived.txt and mixed.txt.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BpeArgs {
    /// One or more corpora; their union is the training text.
    #[arg(long = "in", num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Total vocabulary size (alphabet plus merges).
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OverlapArgs {
    #[arg(long)]
    pub c1: Option<PathBuf>,
    #[arg(long)]
    pub c2: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SyntaxEstimateArgs {
    #[arg(long)]
    pub conllu: Option<PathBuf>,
    /// Add-k smoothing constant.
    #[arg(long)]
    pub smoothing: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Nli,
    Ner,
    Pos,
    Qa,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long, value_enum)]
    pub task: Option<Task>,
    #[command(flatten)]
    pub opts: TransformOpts,
    /// JSON Lines (nli, qa, and ner/pos with a .jsonl name) or
    /// token<TAB>label columns (ner, pos).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SgnsArgs {
    #[arg(long = "in", num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f32>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// word2vec text table.
    #[arg(long)]
    pub emb: Option<PathBuf>,
    /// original<TAB>derived pairs.
    #[arg(long, conflicts_with = "translit")]
    pub map: Option<PathBuf>,
    /// Pair every table token with its transliteration under this map.
    #[arg(long)]
    pub translit: Option<PathBuf>,
    /// cosine or euclidean.
    #[arg(long)]
    pub metric: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// CSV: task,language,transform,setting,bz,bs,mz.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// setting<TAB>alignment.
    #[arg(long)]
    pub align: Option<PathBuf>,
    /// Write report.md, rows.csv, summary.csv and scatter files here instead
    /// of printing Markdown.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Mean Δsup at or above this is marked strong.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
}

fn run(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let section = match &cli.command {
        Command::Transform(_) => "transform",
        Command::Detranslit(_) => "detranslit",
        Command::Mix(_) => "mix",
        Command::Bpe(_) => "bpe",
        Command::Overlap(_) => "overlap",
        Command::SyntaxEstimate(_) => "syntax-estimate",
        Command::Dataset(_) => "dataset",
        Command::Sgns(_) => "sgns",
        Command::Align(_) => "align",
        Command::Report(_) => "report",
    };
    let threads: Option<usize> = config.pick(section, "threads", cli.threads)?;
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
    }
    let ctx = commands::Context {
        config,
        section,
        threads,
    };
    match cli.command {
        Command::Transform(a) => commands::transform(&ctx, a),
        Command::Detranslit(a) => commands::detranslit(&ctx, a),
        Command::Mix(a) => commands::mix(&ctx, a),
        Command::Bpe(a) => commands::bpe(&ctx, a),
        Command::Overlap(a) => commands::overlap(&ctx, a),
        Command::SyntaxEstimate(a) => commands::syntax_estimate(&ctx, a),
        Command::Dataset(a) => commands::dataset(&ctx, a),
        Command::Sgns(a) => commands::sgns(&ctx, a),
        Command::Align(a) => commands::align(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("glosshift: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
