use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("malformed binary data: {0}")]
    Format(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate graph: {0}")]
    GraphDegenerate(String),

    #[error("graph has {n} nodes, above the configured limit of {limit}")]
    GraphTooLarge { n: usize, limit: usize },

    #[error("transition matrix row {row} sums to {sum}, expected 1")]
    NotRowStochastic { row: usize, sum: f64 },

    #[error("random walk did not converge after {iterations} iterations (last L1 residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("quota shortage for class `{class}`, source {source_bucket}: need {needed}, have {available}")]
    Shortage {
        class: String,
        source_bucket: String,
        needed: usize,
        available: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate fusion: {0}")]
    DegenerateFusion(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
