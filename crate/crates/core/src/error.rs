use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("unsupported PGM magic {0:?}")]
    UnsupportedMagic(String),

    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),

    #[error("truncated PGM payload: expected {expected} samples, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("PGM sample {sample} exceeds maxval {maxval}")]
    SampleOutOfRange { sample: u32, maxval: u32 },

    #[error("unsupported maxval {0}")]
    UnsupportedMaxval(u32),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("patch size {n} does not divide image {height}x{width}")]
    NonDivisiblePatch {
        height: usize,
        width: usize,
        n: usize,
    },

    #[error("stale cache: {0}")]
    StaleCache(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}
