use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: line {line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{0}: no embeddings found")]
    EmptyFile(PathBuf),

    #[error("invalid embedding set `{name}`: {message}")]
    InvalidSet { name: String, message: String },

    #[error("at least {required} embedding sets are required, got {found}")]
    TooFewSets { required: usize, found: usize },

    #[error("unknown embedding set `{0}`")]
    UnknownSet(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("rank {d} is not in 1..=min({rows}, {cols})")]
    RankTooLarge { d: usize, rows: usize, cols: usize },

    #[error("word `{word}` is missing from embedding set `{set}`")]
    MissingWord { word: String, set: String },

    #[error("weight for embedding set `{set}` must be positive, got {weight}")]
    NonPositiveWeight { set: String, weight: f64 },

    #[error("training vocabulary is empty")]
    EmptyVocabulary,

    #[error("no projection from `{source_set}` into `{target_set}`")]
    MissingProjection {
        source_set: String,
        target_set: String,
    },

    #[error("word `{0}` is not known to any source embedding set")]
    UncoveredWord(String),

    #[error("only {evaluated} evaluable pairs ({oov} skipped as OOV); at least 2 are needed")]
    TooFewPairs { evaluated: usize, oov: usize },

    #[error("rank correlation undefined: ranks have zero variance")]
    ZeroVariance,

    #[error("query word `{0}` is out of vocabulary")]
    OovQuery(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
