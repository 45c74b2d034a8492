use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("referential integrity: edge {source_id} -[{kind}]-> {target}: {detail}")]
    DanglingEdge {
        source_id: String,
        target: String,
        kind: String,
        detail: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown paper `{0}`")]
    UnknownPaper(String),

    #[error("unknown entity `{0}`")]
    UnknownEntity(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in vector `{0}`")]
    NonFinite(String),

    #[error("vector store: {0}")]
    VectorStore(String),

    #[error("vector store truncated: record {record} of {count} ends early")]
    Truncated { record: u64, count: u64 },

    #[error("malformed parse: {0}")]
    Parse(String),

    #[error("invalid weights: {0}")]
    Weights(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("evaluation: {0}")]
    Evaluation(String),

    #[error("metric {metric} out of range: {value}")]
    MetricRange { metric: String, value: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unknown ablation mode `{0}`")]
    UnknownMode(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        Error::Syntax {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    /// Short machine-readable tag, used by the CLI error record.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Syntax { .. } => "syntax",
            Error::DanglingEdge { .. } => "referential_integrity",
            Error::Schema(_) => "schema",
            Error::UnknownPaper(_) => "unknown_paper",
            Error::UnknownEntity(_) => "unknown_entity",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::VectorStore(_) => "vector_store",
            Error::Truncated { .. } => "truncated",
            Error::Parse(_) => "parse",
            Error::Weights(_) => "weights",
            Error::Config(_) => "config",
            Error::EmptyCorpus => "empty_corpus",
            Error::Evaluation(_) => "evaluation",
            Error::MetricRange { .. } => "metric_range",
            Error::Degenerate(_) => "degenerate",
            Error::UnknownMode(_) => "unknown_mode",
            Error::Serialization(_) => "serialization",
        }
    }

    /// Process exit status for the CLI: 2 for bad input data, 3 for bad
    /// configuration, 4 for I/O, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Syntax { .. }
            | Error::DanglingEdge { .. }
            | Error::Schema(_)
            | Error::UnknownPaper(_)
            | Error::UnknownEntity(_)
            | Error::DimensionMismatch { .. }
            | Error::NonFinite(_)
            | Error::VectorStore(_)
            | Error::Truncated { .. }
            | Error::Parse(_)
            | Error::EmptyCorpus => 2,
            Error::Config(_) | Error::Weights(_) | Error::UnknownMode(_) => 3,
            Error::Io { .. } => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
