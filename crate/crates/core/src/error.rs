use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty vocabulary")]
    EmptyVocabulary,

    #[error("rank too large: requested {requested}, matrix allows at most {max}")]
    RankTooLarge { requested: usize, max: usize },

    #[error("degenerate training set: {0}")]
    DegenerateTrainingSet(String),

    #[error("empty ground truth in scope")]
    EmptyGroundTruth,

    #[error("need at least {folds} short-forms to build {folds} folds, got {got}")]
    TooFewShortForms { folds: usize, got: usize },

    #[error("true error rate needs at least one judged pair")]
    EmptySample,

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A required input is unset or does not exist. `key` is the config
    /// key (and flag name) that supplies it.
    #[error("missing input for `{key}`: {detail}")]
    MissingInput { key: String, detail: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// The config key or flag an error is attributable to, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            Error::MissingInput { key, .. } => Some(key),
            _ => None,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
