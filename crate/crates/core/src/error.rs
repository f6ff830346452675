use std::path::PathBuf;

/// Errors produced by the declipping toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("coefficient vector is not conjugate-symmetric (residual {0:e})")]
    NotConjugateSymmetric(f64),

    #[error("window coverage failure: minimum squared-window sum {min:e} at hop {hop}")]
    Coverage { min: f64, hop: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("oracle did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error(
        "inconsistent restoration: sample {index} differs from the observation on a reliable index"
    )]
    Inconsistent { index: usize },

    #[error("signal too long for whole-signal mode: {len} samples (limit {limit})")]
    TooLong { len: usize, limit: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    /// True for failures caused by numerics (coverage, non-finite values,
    /// solver non-convergence) rather than bad data or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Coverage { .. } | Error::NonFinite(_) | Error::NoConvergence(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
