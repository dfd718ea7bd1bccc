use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("singular matrix (|det| = {0:e})")]
    Singular(f64),

    #[error("point maps to infinity (w = {0:e})")]
    PointAtInfinity(f64),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("degenerate quad for mirror {mirror_id}: {reason}")]
    DegenerateQuad { mirror_id: u32, reason: String },

    #[error("incomplete corner set for mirror {mirror_id}: missing roles {missing:?}")]
    IncompleteQuad { mirror_id: u32, missing: Vec<CornerRole> },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing frame {index} in {dir}")]
    MissingFrame { index: usize, dir: PathBuf },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

use crate::marker::CornerRole;
