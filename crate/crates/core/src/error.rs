use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("corpus is empty after filtering")]
    EmptyCorpus,

    #[error("vocabulary must hold at least 2 terms, found {0}")]
    VocabularyTooSmall(usize),

    #[error("duplicate vocabulary term {0:?}")]
    DuplicateTerm(String),

    #[error("{what} id {id} out of range (limit {limit})")]
    IdOutOfRange {
        what: &'static str,
        id: usize,
        limit: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("term {0} does not occur in any document")]
    AbsentWord(u32),

    #[error("deformation parameter q = 1/T is singular for T = {0}")]
    SingularDeformation(usize),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by malformed or unusable input data, as opposed
    /// to I/O or configuration problems.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format { .. }
                | Error::EmptyCorpus
                | Error::VocabularyTooSmall(_)
                | Error::DuplicateTerm(_)
                | Error::IdOutOfRange { .. }
                | Error::Dimension(_)
                | Error::InvalidMatrix(_)
                | Error::AbsentWord(_)
                | Error::Io { .. }
        )
    }
}
