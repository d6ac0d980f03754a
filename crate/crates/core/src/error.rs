use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {0} is outside the sign-magnitude range [-127, 127]")]
    Range(i64),

    /// A caller broke an operation's precondition (length mismatch, bad index, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("truncated input: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error(transparent)]
    Load(#[from] LoadError),

    /// Post-training quantisation of a layer whose weights are all zero.
    #[error("degenerate quantisation scale: {0} layer weights are all zero")]
    DegenerateScale(&'static str),

    #[error("training failed: {0}")]
    Training(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end: 2 for data and
    /// format problems, 3 for internal invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Contract(_) => 3,
            _ => 2,
        }
    }
}

/// Failures while loading a model file. Each corruption class gets its own
/// variant so callers can tell them apart.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum LoadError {
    #[error("bad magic {0:02x?}, expected \"AMLP\"")]
    BadMagic([u8; 4]),

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u16),

    #[error("model file truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },

    #[error("malformed model: {0}")]
    Malformed(String),
}
