//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the estimator, quantizer, codec and harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("training vector has zero norm")]
    DegenerateTraining,

    #[error("reference channel has zero norm, beamformer undefined")]
    DegenerateBeamformer,

    #[error("composite gain is zero, coherent detection undefined")]
    ZeroGain,

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("cannot fill {cells} cells from {distinct} distinct sample values")]
    EmptyCell { cells: usize, distinct: usize },

    #[error("index {index} out of range for {len} levels")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("malformed frame: {0}")]
    Frame(#[from] FrameError),

    #[error("parse error: {0}")]
    Parse(String),
}

/// Reasons a feedback frame fails to encode or decode.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame truncated: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },

    #[error("unknown message kind 0x{0:02x}")]
    UnknownKind(u8),

    #[error("nonzero padding bits")]
    NonZeroPadding,

    #[error("{len} trailing bytes after frame")]
    TrailingBytes { len: usize },

    #[error("index {index} does not fit in {bits} bits")]
    IndexTooLarge { index: u16, bits: u8 },

    #[error("too many indices ({0}), at most 255 per frame")]
    TooManyIndices(usize),

    #[error("bits per index must be in 1..=16, got {0}")]
    BadIndexWidth(u8),

    #[error("step frame carries no indices")]
    EmptyStep,
}

pub type Result<T> = std::result::Result<T, Error>;
