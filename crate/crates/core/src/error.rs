use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("code construction failed: {0}")]
    Construction(String),

    #[error(
        "refusing to enumerate 2^{k} codewords (cap is 2^{cap}); raise the enumeration cap explicitly if this is intended"
    )]
    EnumerationCap { k: usize, cap: usize },

    #[error("codeword and sphere belong to different codes (fingerprint mismatch)")]
    FingerprintMismatch,

    #[error("sphere cache: {0}")]
    Cache(#[from] CacheError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration: {0}")]
    Config(String),
}

/// Failures when reading a stored sphere set.
#[derive(Debug, Error)]
pub enum CacheError {
    #[error("bad header: {0}")]
    BadHeader(String),

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("payload checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Integrity { stored: u32, computed: u32 },

    #[error("stored code fingerprint does not match the requested code")]
    FingerprintMismatch,

    #[error("inconsistent contents: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
