use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("invalid config field `{field}`: {msg}")]
    Config { field: &'static str, msg: String },
    #[error("checksum mismatch for {}", file.display())]
    Checksum { file: PathBuf },
    #[error("training failed: non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),
    #[error("{}:{line}: {msg}", file.display())]
    Load {
        file: PathBuf,
        line: u64,
        msg: String,
    },
    #[error("{}: {msg}", file.display())]
    Format { file: PathBuf, msg: String },
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> Self {
        Error::Shape { op, lhs, rhs }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
