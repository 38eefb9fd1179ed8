//! PSK modems, maximum-ratio transmit beamforming and coherent detection.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::vector::{ChannelVector, ComplexSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Bpsk,
    /// Gray-labeled QPSK.
    Qpsk,
}

impl Scheme {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Scheme::Bpsk => 1,
            Scheme::Qpsk => 2,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Bpsk => "bpsk",
            Scheme::Qpsk => "qpsk",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Scheme::Bpsk),
            "qpsk" | "qpsk_gray" | "qpsk-gray" => Ok(Scheme::Qpsk),
            other => Err(Error::Parse(format!("unknown modulation {other:?}"))),
        }
    }
}

/// A constellation and its symbol energy `P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulation {
    scheme: Scheme,
    symbol_power: f64,
}

impl Modulation {
    pub fn new(scheme: Scheme, symbol_power: f64) -> Result<Self> {
        if !(symbol_power > 0.0 && symbol_power.is_finite()) {
            return Err(Error::Parameter(format!(
                "symbol power must be positive, got {symbol_power}"
            )));
        }
        Ok(Modulation { scheme, symbol_power })
    }

    pub fn bpsk() -> Self {
        Modulation {
            scheme: Scheme::Bpsk,
            symbol_power: 1.0,
        }
    }

    pub fn qpsk() -> Self {
        Modulation {
            scheme: Scheme::Qpsk,
            symbol_power: 1.0,
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn symbol_power(&self) -> f64 {
        self.symbol_power
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.scheme.bits_per_symbol()
    }

    /// Constellation point for the label `bits` (MSB first).
    fn point(&self, bits: &[u8]) -> ComplexSample {
        let amp = self.symbol_power.sqrt();
        match self.scheme {
            Scheme::Bpsk => ComplexSample::new(if bits[0] == 0 { amp } else { -amp }, 0.0),
            Scheme::Qpsk => {
                // 00 → π/4, 01 → 3π/4, 11 → 5π/4, 10 → 7π/4
                let m = match (bits[0], bits[1]) {
                    (0, 0) => 0.0,
                    (0, _) => 1.0,
                    (_, 0) => 3.0,
                    _ => 2.0,
                };
                ComplexSample::from_polar(amp, FRAC_PI_4 + m * 2.0 * FRAC_PI_4)
            }
        }
    }
}

/// Maps bits (values 0/1) to symbols.
pub fn modulate(bits: &[u8], modulation: &Modulation) -> Result<Vec<ComplexSample>> {
    let k = modulation.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(Error::Parameter(format!(
            "{} bits cannot be split into {k}-bit symbols",
            bits.len()
        )));
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(Error::Parameter("bits must be 0 or 1".into()));
    }
    Ok(bits.chunks(k).map(|c| modulation.point(c)).collect())
}

/// Unit-norm transmit weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    weights: ChannelVector,
}

impl Beamformer {
    pub fn weights(&self) -> &ChannelVector {
        &self.weights
    }

    /// Transmit vector `s·w`.
    pub fn transmit(&self, s: ComplexSample) -> ChannelVector {
        self.weights.scaled(s)
    }

    /// Noiseless gain `g = Hᴴw` seen by a receiver behind channel `h`.
    pub fn composite_gain(&self, h: &ChannelVector) -> Result<ComplexSample> {
        h.inner(&self.weights)
    }
}

/// `w = h_ref/‖h_ref‖`. With `h_ref = H` the received gain is `‖H‖`.
pub fn make_beamformer(h_ref: &ChannelVector) -> Result<Beamformer> {
    let norm = h_ref.norm();
    if norm <= 0.0 {
        return Err(Error::DegenerateBeamformer);
    }
    Ok(Beamformer {
        weights: h_ref.scaled(ComplexSample::new(1.0 / norm, 0.0)),
    })
}

/// Derotates by the known composite gain and slices to the nearest point.
pub fn detect(d: ComplexSample, composite_gain: ComplexSample, modulation: &Modulation) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(modulation.bits_per_symbol());
    detect_into(d, composite_gain, modulation, &mut out)?;
    Ok(out)
}

/// Like [`detect`], appending to `out`.
pub fn detect_into(
    d: ComplexSample,
    composite_gain: ComplexSample,
    modulation: &Modulation,
    out: &mut Vec<u8>,
) -> Result<()> {
    let g = composite_gain.norm();
    if g == 0.0 {
        return Err(Error::ZeroGain);
    }
    let y = d * composite_gain.conj() / g;
    match modulation.scheme {
        Scheme::Bpsk => out.push((y.re < 0.0) as u8),
        Scheme::Qpsk => {
            out.push((y.im < 0.0) as u8);
            out.push((y.re < 0.0) as u8);
        }
    }
    Ok(())
}
