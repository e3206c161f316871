//! Error type shared by every stage of the toolkit.

use thiserror::Error;

/// Failures surfaced by graph ingestion, encoding, propagation, training,
/// evaluation, and synchronization.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data; names the file and 1-based line when known.
    #[error("ingest error at {path}:{line}: {msg}")]
    Ingest { path: String, line: usize, msg: String },

    /// Dimension disagreement between two structures.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An argument violated a documented precondition.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A value fell outside its documented range.
    #[error("range error: {0}")]
    Range(String),

    /// An iterative solver did not reach its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: {msg}")]
    Diverged { epoch: usize, msg: String },

    /// Evaluation was requested on an invalid selection.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// Bad run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
