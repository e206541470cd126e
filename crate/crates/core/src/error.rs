use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input violates an operation's precondition.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: duplicate record id {id:?}")]
    DuplicateId { path: PathBuf, id: String },

    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("empty vocabulary")]
    EmptyVocabulary,

    #[error("nothing to explain")]
    NothingToExplain,

    #[error("no co-occurrence statistics")]
    NoCoOccurrence,

    #[error("no topic has at least two in-vocabulary terms")]
    NoEmbeddedTopics,

    #[error("topic {topic} out of range for a {k}-topic model")]
    TopicOutOfRange { topic: usize, k: usize },

    #[error("{0}")]
    Data(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad parameters rather than bad data or I/O.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::TopicOutOfRange { .. })
    }
}

macro_rules! ensure_config {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::Error::Config(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure_config;
