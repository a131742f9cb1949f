use std::path::PathBuf;

use crate::model::{Modality, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },

    #[error("line {line} (frame id {id}): {}", join_violations(violations))]
    InvalidFrame {
        line: usize,
        id: u64,
        violations: Vec<Violation>,
    },

    #[error("frame {index}: missing {modality} plane")]
    MissingModality { index: usize, modality: Modality },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("descriptor layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("corrupt {kind} file: {message}")]
    Format { kind: &'static str, message: String },

    #[error("{0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(kind: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            kind,
            message: message.into(),
        }
    }

    /// True for errors caused by unreadable or unwritable files rather than bad content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
