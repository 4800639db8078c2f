//! Transcript evaluation: export, deidentification, rater assignment,
//! rating aggregation and per-turn metrics.

mod assign;
mod deid;
mod metrics;
mod ratings;
mod transcript;

use crate::syntax::ParseError;

pub use assign::{assign_raters, Assignment};
pub use deid::{deidentify, deidentify_batch, parse_names, Deidentified, NameLexicon};
pub use metrics::{sentiment_trajectory, verbosity, write_trajectories, TrajectoryPoint, Verbosity};
pub use ratings::{
    aggregate, consensus, parse_sheets, summarize, write_sheets, ConditionStat, Criterion, RatingSheet, Report,
    ReportRow, SD_LABEL, SHEET_HEADER,
};
pub use transcript::{Condition, Speaker, Transcript, Turn};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("infeasible assignment: coverage x transcripts = {demand} > load x raters = {capacity}")]
    Infeasible { demand: usize, capacity: usize },
    #[error("coverage {coverage} needs at least that many raters, have {raters}")]
    TooFewRaters { coverage: usize, raters: usize },
    #[error("rating sheet refers to unknown transcript {0:?}")]
    UnknownTranscript(String),
    #[error("rater {rater:?} rated transcript {transcript:?} more than once")]
    DuplicateSheet { transcript: String, rater: String },
    #[error("smoothing window must be at least 1")]
    ZeroWindow,
}
