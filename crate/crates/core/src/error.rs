use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("columns are linearly dependent; no left inverse exists")]
    DependentColumns,

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("invalid subgraph selection: {0}")]
    InvalidSelection(String),

    #[error("oracle cap exceeded: {0}")]
    CapExceeded(String),

    #[error("selection is not balanced")]
    Unbalanced,

    #[error("unknown constraint id {0}")]
    UnknownConstraint(usize),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    #[error("covering contract violated: {0}")]
    ContractViolation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
