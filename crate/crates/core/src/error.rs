use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),

    #[error("truncated pixel data: expected {expected} samples, found {found}")]
    TruncatedData { expected: usize, found: usize },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("rectangle {top},{left} {height}x{width} exceeds image bounds {image_height}x{image_width}")]
    OutOfBounds {
        top: usize,
        left: usize,
        height: usize,
        width: usize,
        image_height: usize,
        image_width: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("odd dimensions {height}x{width}: Haar transform needs even height and width")]
    OddDimension { height: usize, width: usize },

    #[error("dimensions {height}x{width} are not divisible by {divisor}")]
    InsufficientDivisibility {
        height: usize,
        width: usize,
        divisor: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),

    #[error("manifest line {line}: {message}")]
    ManifestParse { line: u64, message: String },

    #[error("manifest validation failed: {0}")]
    ManifestValidation(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("not a model file: {0}")]
    ModelFormat(String),

    #[error("unsupported model file version {found} (expected {expected})")]
    ModelVersion { found: u8, expected: u8 },

    #[error("model file is corrupt: {0}")]
    ModelCorrupt(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }
}
