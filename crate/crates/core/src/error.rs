use std::io;

use thiserror::Error;

/// Errors produced by the toolkit outside of per-line flow parsing, which
/// collects [`crate::ingest::ParseError`]s instead of failing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient data: need {needed}, got {got}")]
    InsufficientData { needed: String, got: String },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("infeasible scenario: {0}")]
    InfeasibleScenario(String),

    #[error("invalid input at record {record}: {reason}")]
    InvalidRecord { record: u64, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
