//! Adaptive partial-feedback channel estimation for transmit beamforming.
//!
//! The receiver steers the transmitter's channel estimate toward the true
//! channel by feeding back one quantized step size per iteration. The crate
//! covers the estimation recursion and its session protocol, the Lloyd-Max
//! step quantizer, the reverse-link frame codec, maximum-ratio transmit
//! beamforming with PSK modems, and a seeded Monte-Carlo harness.

pub mod beamformer;
pub mod channel;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod feedback;
pub mod harness;
pub mod quantizer;
pub mod rng;
pub mod vector;

pub use error::{Error, FrameError, Result};
pub use vector::{ChannelVector, ComplexSample};
