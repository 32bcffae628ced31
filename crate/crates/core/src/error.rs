//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("no documents")]
    NoDocuments,

    #[error("no tokens")]
    NoTokens,

    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),

    #[error("low-level label {low:?} maps to multiple high-level labels: {highs:?}")]
    LabelHierarchy { low: String, highs: Vec<String> },

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("{name} must be in (0, 1), got {value}")]
    InvalidFraction { name: &'static str, value: f64 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("{path}: not a run bundle (bad magic)")]
    NotARunBundle { path: PathBuf },

    #[error("{path}: unexpected end of file")]
    UnexpectedEof { path: PathBuf },

    #[error("{what}: expected {expected}, got {actual}")]
    ShapeMismatch {
        what: String,
        expected: String,
        actual: String,
    },

    #[error("{matrix} row {row} not normalized (sum {sum})")]
    RowNotNormalized {
        matrix: &'static str,
        row: usize,
        sum: f64,
    },

    #[error("{matrix} row {row} has a non-finite or negative entry")]
    InvalidEntry { matrix: &'static str, row: usize },

    #[error("run context mismatch: {0}")]
    ContextMismatch(String),

    #[error("labelings cover different document sets")]
    LabelDomainMismatch,

    #[error("{0}")]
    Degenerate(String),
}
