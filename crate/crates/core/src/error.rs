use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the filter toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("degenerate image: {0}")]
    DegenerateImage(String),

    #[error("corrupted spectrum: imaginary residue {0:e} exceeds tolerance")]
    CorruptedSpectrum(f64),

    #[error("singular system at frequency bin {bin} (row {row}, col {col})")]
    SingularBin { bin: usize, row: usize, col: usize },

    #[error("empty subspace history")]
    EmptyHistory,

    #[error("{path}:{line}: {message}")]
    Data {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("model format: {0}")]
    Format(String),

    #[error("image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// True for failures of the numerical core (singular systems, corrupted spectra).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularBin { .. } | Error::CorruptedSpectrum(_) | Error::NonFinite(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
