use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    Length { expected: usize, actual: usize },

    #[error("invalid code parameters: {0}")]
    Parameter(String),

    #[error("message has a non-zero frozen bit at position {0}")]
    FrozenBit(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("channel error probability {pe} cannot normalize a path metric")]
    Unreliable { pe: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Length { expected, actual })
    }
}
