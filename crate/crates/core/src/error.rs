use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("checksum mismatch in section `{section}`: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum {
        section: String,
        stored: u32,
        computed: u32,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("coordinate out of domain: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("values exceed half-precision range in: {}", .0.join(", "))]
    Overflow(Vec<String>),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) => 1,
            Error::Io { .. }
            | Error::Format { .. }
            | Error::Version { .. }
            | Error::Checksum { .. }
            | Error::Dimension(_)
            | Error::Domain(_) => 2,
            Error::Overflow(_) | Error::Numerical(_) => 3,
        }
    }
}
