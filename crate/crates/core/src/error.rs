use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter was outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Sample size outside the range a test supports.
    #[error("sample size {n} outside supported range [{min}, {max}]")]
    SampleSize { n: usize, min: usize, max: usize },

    /// Zero-variance or otherwise uninformative input.
    #[error("degenerate sample: {0}")]
    Degenerate(String),

    /// Every projected direction was degenerate; no aggregate exists.
    #[error("empty battery: all {0} directions produced constant projections")]
    EmptyBattery(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Malformed file contents (IDX, noise matrix, numeric text).
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// True for errors caused by degenerate statistics rather than bad input.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::Degenerate(_) | Error::EmptyBattery(_))
    }
}
