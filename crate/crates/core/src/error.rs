use std::io;
use std::path::PathBuf;

/// Errors produced by the library and the command-line front-end.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unreadable file {}: {source}", path.display())]
    Unreadable {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("zero-dimension image")]
    ZeroDimension,
    #[error("size mismatch: expected {expected} values, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("negative entries in gradient field")]
    NegativeEntries,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("image codec error: {0}")]
    Codec(#[from] image::ImageError),
}

impl Error {
    /// True for failures caused by bad input rather than a broken internal invariant.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Invariant(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
