use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated frame payload: frame {frame} needs {needed} bytes, {available} available")]
    TruncatedFrame {
        frame: usize,
        needed: usize,
        available: usize,
    },

    #[error("unsupported chroma tag `{0}`")]
    UnsupportedChroma(String),

    #[error("sample value {value} exceeds {bit_depth}-bit range")]
    SampleOutOfRange { value: u32, bit_depth: u8 },

    #[error("empty frame sequence")]
    EmptySequence,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no candidate prediction mode available")]
    NoCandidates,

    #[error("quantizer index {index} outside codebook of {len} entries")]
    IndexOutOfRange { index: i32, len: usize },

    #[error("corrupt payload: {0}")]
    Corrupt(String),

    #[error("truncated payload")]
    Truncated,

    #[error("bad magic or unsupported version")]
    BadMagic,

    #[error("insufficient history for feature prediction")]
    InsufficientHistory,

    #[error("metric error: {0}")]
    Metric(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
