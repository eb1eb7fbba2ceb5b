//! Alignment, rank correlation and score-difference reporting.

mod alignment;
mod report;
mod spearman;

use std::io;

use thiserror::Error;

pub use alignment::{alignment, Metric, VocabBijection};
pub use report::{
    build_report, correlate_report, read_alignments, read_scores, write_markdown, write_rows_csv, write_scatter,
    write_summary_csv, Aggregate, Correlated, ReportRow, ScoreRecord, TaskCorrelation, TransferReport,
    DEFAULT_STRONG_THRESHOLD,
};
pub use spearman::{average_ranks, pearson, spearman, Correlation, EXACT_P_MAX_N};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("tokens missing from the embedding table: {}", .0.join(", "))]
    MissingToken(Vec<String>),
    #[error("the vocabulary bijection is empty")]
    EmptyBijection,
    #[error("not a bijection: {0}")]
    NotBijective(String),
    #[error("inputs differ in length ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },
    #[error("rank correlation needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("row {row} ({task}/{language}/{transform}) lacks {operand}")]
    MissingOperand {
        row: usize,
        task: String,
        language: String,
        transform: String,
        operand: &'static str,
    },
    #[error("no task shares at least 3 settings with the alignment table")]
    InsufficientOverlap,
    #[error("setting {setting:?} appears under more than one transformation for task {task:?}")]
    AmbiguousSetting { task: String, setting: String },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}
