use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sentence: {0}")]
    InvalidSentence(String),

    #[error("invalid edit: {0}")]
    InvalidEdit(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("distributions belong to different vocabularies ({0:#x} vs {1:#x})")]
    VocabMismatch(u64, u64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("sequence of {len} tokens exceeds the backend limit of {limit}")]
    SequenceTooLong { len: usize, limit: usize },

    #[error("backend error: {0}")]
    Backend(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
