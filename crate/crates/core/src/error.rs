use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("node {node} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("corpus has no training sentences")]
    EmptyCorpus,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("inconsistent task: {0}")]
    InvalidTask(String),

    #[error("graph too dense: could not sample {wanted} non-edges after {attempts} attempts")]
    TooDense { wanted: usize, attempts: usize },
}

impl Error {
    /// Short stable identifier used by the CLI's single-line error output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::NodeOutOfRange { .. } => "node-range",
            Error::DimensionMismatch { .. } => "dimension",
            Error::InvalidArgument(_) => "argument",
            Error::EmptyGraph => "empty-graph",
            Error::EmptyCorpus => "empty-corpus",
            Error::NonFinite(_) => "non-finite",
            Error::InvalidTask(_) => "task",
            Error::TooDense { .. } => "too-dense",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
