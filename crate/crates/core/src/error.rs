use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("order {0} is outside the supported range 1..=16")]
    InvalidOrder(usize),

    #[error("invalid constraint set: {0}")]
    InvalidConstraints(String),

    #[error("cannot normalize: {0}")]
    NotNormalizable(String),

    #[error("grid parse error: {0}")]
    Parse(String),

    #[error("prefix rejected at step {step}: {reason}")]
    InvalidPrefix { step: usize, reason: String },

    #[error("unit mask holds {found} symbols, a forced cell needs exactly {expected}")]
    NotForced { found: u32, expected: u32 },

    #[error("lookahead window {start}..={end} is outside a plan of {len} steps")]
    WindowOutOfRange { start: usize, end: usize, len: usize },

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("hourglass shape mismatch: {0}")]
    Shape(String),

    #[error("invalid depth {depth}: {reason}")]
    InvalidDepth { depth: usize, reason: String },

    #[error("configuration mismatch: {0}")]
    Fingerprint(String),

    #[error("{}:{line}: {msg}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
