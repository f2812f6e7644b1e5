use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corpus contains no tokens")]
    EmptyCorpus,

    #[error("no in-vocabulary token remains after encoding")]
    EmptyEncoding,

    #[error("vocabulary file line {line}: {msg}")]
    VocabFormat { line: usize, msg: String },

    #[error("checkpoint: {0}")]
    Checkpoint(#[from] CheckpointError),

    #[error("dataset line {line}: {msg}")]
    DatasetFormat { line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mode mismatch: expected {expected}, found {found}")]
    ModeMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("hash length k={k} out of range 1..={neurons}")]
    HashLengthOutOfRange { k: usize, neurons: usize },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("average precision undefined: no positive labels")]
    NoPositives,

    #[error("every pair was dropped during encoding ({dropped} pairs)")]
    AllPairsDropped { dropped: usize },

    #[error("{records} records cannot be split into {folds} folds")]
    TooFewRecords { records: usize, folds: usize },

    #[error("vocabulary checksum does not match the checkpoint")]
    VocabMismatch,

    #[error("non-finite weights after epoch {epoch}, step {step}")]
    NonFinite {
        epoch: usize,
        step: usize,
        /// Weights as they were before the offending update.
        last_good: Box<crate::model::ComplexWeights>,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckpointError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported version {0}")]
    Version(u32),
    #[error("unknown mode tag {0}")]
    Mode(u32),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("trailing bytes after payload")]
    Trailing,
    #[error("crc mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Crc { stored: u32, computed: u32 },
    #[error("invalid weights: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
