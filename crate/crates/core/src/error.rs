use thiserror::Error;

/// Errors produced by the community-detection toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("line {line}: unknown node label `{label}`")]
    UnknownLabel { label: String, line: usize },

    #[error("node {index} out of range for graph with {n} nodes")]
    OutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("{0} requires a partition: {1}")]
    NotAPartition(&'static str, String),

    #[error("numerical fault: {0}")]
    Numerical(String),

    #[error("infeasible generator configuration: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("suite definition: {0}")]
    Suite(String),
}

impl Error {
    /// True for errors caused by bad input or configuration rather than a
    /// fault inside the library.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
