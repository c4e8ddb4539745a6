use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("matrix is singular or ill-conditioned ({0})")]
    Singular(String),

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    /// A failure inside one item of a batched kernel.
    #[error("batch item {index}: {source}")]
    BatchItem {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("numeric failure at iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("graph error: {0}")]
    Graph(String),

    #[error("unresolved reference: {0}")]
    Reference(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("diagnostic error: {0}")]
    Diagnostic(String),

    #[error("quadrature range error: {0}")]
    Range(String),
}

impl Error {
    pub(crate) fn at_item(self, index: usize) -> Error {
        Error::BatchItem {
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Error {
        Error::Iteration {
            iteration,
            source: Box::new(self),
        }
    }

    /// True for errors that come from numerical breakdown (as opposed to bad
    /// input or configuration).
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NonFinite(_) | Error::Singular(_) | Error::NotPositiveDefinite { .. } => true,
            Error::BatchItem { source, .. } | Error::Iteration { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
