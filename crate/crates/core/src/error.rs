use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum TopicError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("index out of range at line {line}: {what} {index} not in 1..={max}")]
    IndexOutOfRange {
        line: usize,
        what: &'static str,
        index: u64,
        max: u64,
    },

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("document {0} has zero length")]
    ZeroLengthDocument(usize),

    #[error("invalid number of topics k={k}: {reason}")]
    InvalidK { k: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("normalization entry {index} is not positive ({value})")]
    NonPositiveNormalization { index: usize, value: f64 },

    #[error("singular values {index} and {next} are tied within tolerance ({gap:e} <= {tol:e})")]
    SingularValueTie {
        index: usize,
        next: usize,
        gap: f64,
        tol: f64,
    },

    #[error("SVD did not converge after {iterations} iterations (residual {residual:e})")]
    SvdNotConverged { iterations: usize, residual: f64 },

    #[error("k-means needs {needed} distinct points but only {available} exist")]
    TooFewDistinctPoints { needed: usize, available: usize },

    #[error("vertex system is singular; vertices are affinely dependent")]
    SingularVertexSystem,

    #[error("topic column {0} has vanishing l1 mass; estimate is degenerate")]
    DegenerateTopic(usize),

    #[error("infeasible synthetic configuration: {0}")]
    InfeasibleConfig(String),
}

impl TopicError {
    /// Short machine-readable tag, used in CLI error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            TopicError::Io { .. } => "io",
            TopicError::Parse { .. } => "parse",
            TopicError::IndexOutOfRange { .. } => "index_out_of_range",
            TopicError::EmptyCorpus(_) => "empty_corpus",
            TopicError::ZeroLengthDocument(_) => "zero_length_document",
            TopicError::InvalidK { .. } => "invalid_k",
            TopicError::InvalidArgument(_) => "invalid_argument",
            TopicError::DimensionMismatch(_) => "dimension_mismatch",
            TopicError::NonPositiveNormalization { .. } => "nonpositive_normalization",
            TopicError::SingularValueTie { .. } => "singular_value_tie",
            TopicError::SvdNotConverged { .. } => "svd_not_converged",
            TopicError::TooFewDistinctPoints { .. } => "too_few_distinct_points",
            TopicError::SingularVertexSystem => "singular_vertex_system",
            TopicError::DegenerateTopic(_) => "degenerate_topic",
            TopicError::InfeasibleConfig(_) => "infeasible_config",
        }
    }

    /// True for failures of the numerical pipeline itself, as opposed to bad
    /// input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            TopicError::SingularValueTie { .. }
                | TopicError::SvdNotConverged { .. }
                | TopicError::SingularVertexSystem
                | TopicError::DegenerateTopic(_)
                | TopicError::NonPositiveNormalization { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, TopicError>;
