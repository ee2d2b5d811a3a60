use thiserror::Error;

use crate::dist::DistError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed record: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: ordering violation: {msg}")]
    Ordering { line: usize, msg: String },
    #[error("clock skew: event at {event_ns} ns precedes state time {state_ns} ns")]
    ClockSkew { event_ns: i64, state_ns: i64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("model file: {0}")]
    Model(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
