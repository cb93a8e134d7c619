use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong inside the toolkit.
///
/// Variants are grouped so a front end can map them onto exit codes:
/// [`Error::is_numeric`] marks numeric failures, everything else is a data
/// or precondition problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sequence")]
    EmptySequence,

    #[error("zero-norm embedding")]
    ZeroNorm,

    #[error("non-finite value in embedding")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("ragged hidden-state matrix: row {row} has width {got}, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("need at least 2 responses, got {0}")]
    TooFewResponses(usize),

    #[error("duplicate key ({prompt_id}, {response_id})")]
    DuplicateKey {
        prompt_id: String,
        response_id: String,
    },

    #[error("missing embedding for ({prompt_id}, {response_id})")]
    MissingEmbedding {
        prompt_id: String,
        response_id: String,
    },

    #[error("unknown response {response_id} in prompt {prompt_id}")]
    UnknownResponse {
        prompt_id: String,
        response_id: String,
    },

    #[error("non-canonical pair ({left}, {right}) in prompt {prompt_id}")]
    NonCanonicalPair {
        prompt_id: String,
        left: String,
        right: String,
    },

    #[error("score-ratio filter requested but response {0} has no score")]
    MissingScore(String),

    #[error("degenerate: single cluster")]
    DegenerateClustering,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("training diverged at step {step} (learning rate {learning_rate}): loss is {loss}")]
    Diverged {
        step: usize,
        learning_rate: f64,
        loss: f64,
    },
}

impl Error {
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

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Diverged { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
