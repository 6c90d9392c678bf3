//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed JSON line: {source}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },

    #[error("duplicate {what} id `{id}`")]
    DuplicateId { what: &'static str, id: String },

    #[error("unknown {what} id `{id}`")]
    UnknownId { what: &'static str, id: String },

    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    #[error("bad magic in {what} file")]
    BadMagic { what: &'static str },

    #[error("unsupported {what} version {found}")]
    Version { what: &'static str, found: u16 },

    #[error("truncated {what} file")]
    Truncated { what: &'static str },

    #[error("duplicate embedding record for article `{id}`, kind {kind}")]
    DuplicateRecord { id: String, kind: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in vector for article `{0}`")]
    NonFinite(String),

    #[error("missing embeddings for {} article(s): {}", .0.len(), .0.join(", "))]
    MissingEmbeddings(Vec<String>),

    #[error("agreement undefined: no unit has two or more codings")]
    AgreementUndefined,

    #[error("empty input for {0}")]
    EmptyInput(&'static str),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            detail: detail.into(),
        }
    }
}
