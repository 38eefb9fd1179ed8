//! Reverse-link framing.
//!
//! Frame layout (all multi-byte fields big-endian):
//!
//! ```text
//! byte 0      kind (0x01 start, 0x02 step, 0x03 end)
//! bytes 1..3  iteration counter (u16)
//! step only:
//! byte 3      n_R, number of quantizer indices
//! bytes 4..   indices packed MSB-first, `bits` bits each, zero padded
//! ```
//!
//! The index width is not carried in the frame; both ends know it from the
//! codebook.

use crate::error::FrameError;

pub const KIND_START: u8 = 0x01;
pub const KIND_STEP: u8 = 0x02;
pub const KIND_END: u8 = 0x03;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeedbackMessage {
    /// Receiver asks the transmitter to pause data and start estimating.
    StartEstimation,
    /// Quantizer indices for iteration `iteration`, one per receive antenna.
    Step { iteration: u16, indices: Vec<u16> },
    /// Estimation finished after `iteration` steps.
    EndEstimation { iteration: u16 },
}

impl FeedbackMessage {
    pub fn kind(&self) -> u8 {
        match self {
            FeedbackMessage::StartEstimation => KIND_START,
            FeedbackMessage::Step { .. } => KIND_STEP,
            FeedbackMessage::EndEstimation { .. } => KIND_END,
        }
    }

    pub fn iteration(&self) -> u16 {
        match self {
            FeedbackMessage::StartEstimation => 0,
            FeedbackMessage::Step { iteration, .. } | FeedbackMessage::EndEstimation { iteration } => *iteration,
        }
    }

    /// Payload bits carried by this message (indices only).
    pub fn payload_bits(&self, bits_per_index: u8) -> usize {
        match self {
            FeedbackMessage::Step { indices, .. } => indices.len() * bits_per_index as usize,
            _ => 0,
        }
    }
}

/// Total frame length in bytes.
pub fn frame_len(kind: u8, n_r: usize, bits_per_index: u8) -> usize {
    if kind == KIND_STEP {
        4 + (n_r * bits_per_index as usize).div_ceil(8)
    } else {
        3
    }
}

fn check_width(bits: u8) -> Result<(), FrameError> {
    if !(1..=16).contains(&bits) {
        return Err(FrameError::BadIndexWidth(bits));
    }
    Ok(())
}

pub fn encode_message(msg: &FeedbackMessage, bits_per_index: u8) -> Result<Vec<u8>, FrameError> {
    check_width(bits_per_index)?;
    let it = msg.iteration().to_be_bytes();
    let mut out = vec![msg.kind(), it[0], it[1]];
    if let FeedbackMessage::Step { indices, .. } = msg {
        if indices.is_empty() {
            return Err(FrameError::EmptyStep);
        }
        if indices.len() > 255 {
            return Err(FrameError::TooManyIndices(indices.len()));
        }
        out.push(indices.len() as u8);
        let mut writer = BitWriter::default();
        for &index in indices {
            if (index as u32) >> bits_per_index != 0 {
                return Err(FrameError::IndexTooLarge {
                    index,
                    bits: bits_per_index,
                });
            }
            writer.push(index as u32, bits_per_index);
        }
        out.extend(writer.finish());
    }
    Ok(out)
}

pub fn decode_message(bytes: &[u8], bits_per_index: u8) -> Result<FeedbackMessage, FrameError> {
    check_width(bits_per_index)?;
    if bytes.len() < 3 {
        return Err(FrameError::Truncated {
            needed: 3,
            have: bytes.len(),
        });
    }
    let kind = bytes[0];
    let iteration = u16::from_be_bytes([bytes[1], bytes[2]]);
    let expected = match kind {
        KIND_START | KIND_END => 3,
        KIND_STEP => {
            if bytes.len() < 4 {
                return Err(FrameError::Truncated {
                    needed: 4,
                    have: bytes.len(),
                });
            }
            frame_len(KIND_STEP, bytes[3] as usize, bits_per_index)
        }
        other => return Err(FrameError::UnknownKind(other)),
    };
    if bytes.len() < expected {
        return Err(FrameError::Truncated {
            needed: expected,
            have: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(FrameError::TrailingBytes {
            len: bytes.len() - expected,
        });
    }
    match kind {
        KIND_START => Ok(FeedbackMessage::StartEstimation),
        KIND_END => Ok(FeedbackMessage::EndEstimation { iteration }),
        _ => {
            let n_r = bytes[3] as usize;
            if n_r == 0 {
                return Err(FrameError::EmptyStep);
            }
            let mut reader = BitReader::new(&bytes[4..]);
            let indices = (0..n_r).map(|_| reader.take(bits_per_index) as u16).collect();
            if !reader.rest_is_zero() {
                return Err(FrameError::NonZeroPadding);
            }
            Ok(FeedbackMessage::Step { iteration, indices })
        }
    }
}

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn from_hex(s: &str) -> Option<Vec<u8>> {
    if !s.len().is_multiple_of(2) {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(s.get(i..i + 2)?, 16).ok())
        .collect()
}

#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    used: u8,
}

impl BitWriter {
    fn push(&mut self, value: u32, width: u8) {
        for shift in (0..width).rev() {
            if self.used == 0 {
                self.bytes.push(0);
            }
            let bit = ((value >> shift) & 1) as u8;
            *self.bytes.last_mut().unwrap() |= bit << (7 - self.used);
            self.used = (self.used + 1) % 8;
        }
    }

    fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    fn take(&mut self, width: u8) -> u32 {
        let mut v = 0u32;
        for _ in 0..width {
            let byte = self.bytes[self.pos / 8];
            let bit = (byte >> (7 - self.pos % 8)) & 1;
            v = (v << 1) | bit as u32;
            self.pos += 1;
        }
        v
    }

    fn rest_is_zero(&mut self) -> bool {
        while self.pos < self.bytes.len() * 8 {
            if self.take(1) != 0 {
                return false;
            }
        }
        true
    }
}
