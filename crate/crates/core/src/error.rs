use std::path::PathBuf;

use crate::corpus::CorpusError;
use crate::embeddings::EmbeddingError;
use crate::eval::EvalError;
use crate::features::AnnotationError;
use crate::segment::AlignmentError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate-wide error. Each module has its own error type; this enum wraps
/// them so the pipeline and CLI can propagate with `?`.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Errors raised by the trainable models and their file formats.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected input dim {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("label count {labels} does not match token count {tokens}")]
    LabelMismatch { tokens: usize, labels: usize },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("model file format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },
}
