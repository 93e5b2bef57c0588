use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("unsupported bit depth: {0}")]
    UnsupportedBitDepth(String),

    #[error("image dimension {0} exceeds the 65536 pixel limit")]
    DimensionOverflow(u64),

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("channel mismatch: {0}")]
    ChannelMismatch(String),

    #[error("invalid color space: {0}")]
    InvalidColorSpace(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("png: {0}")]
    Png(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
