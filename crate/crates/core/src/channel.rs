//! Block-fading Rayleigh channel, the forward link and the staleness test.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::vector::{draw_complex_gaussian, inner_product, ChannelVector, ComplexSample};

/// The true channel for one block-fading epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: ChannelVector,
    pub epoch: u64,
}

impl ChannelRealization {
    /// Draws the first epoch.
    pub fn first(rng: &mut RngStream, n_t: usize) -> Result<Self> {
        Ok(ChannelRealization {
            h: draw_complex_gaussian(rng, n_t, 1.0)?,
            epoch: 0,
        })
    }

    /// Replaces the channel with a fresh independent draw.
    pub fn advance(&mut self, rng: &mut RngStream) -> Result<()> {
        *self = new_epoch(rng, self.h.len(), self.epoch + 1)?;
        Ok(())
    }
}

/// Draws an i.i.d. CN(0, 1) channel for epoch `epoch`.
pub fn new_epoch(rng: &mut RngStream, n_t: usize, epoch: u64) -> Result<ChannelRealization> {
    if n_t == 0 {
        return Err(Error::Parameter("n_t must be at least 1".into()));
    }
    Ok(ChannelRealization {
        h: draw_complex_gaussian(rng, n_t, 1.0)?,
        epoch,
    })
}

/// Additive complex Gaussian noise with variance `sigma_v_sq`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma_v_sq: f64,
}

impl NoiseModel {
    pub fn new(sigma_v_sq: f64) -> Result<Self> {
        if !(sigma_v_sq > 0.0 && sigma_v_sq.is_finite()) {
            return Err(Error::Parameter(format!(
                "noise variance must be positive and finite, got {sigma_v_sq}"
            )));
        }
        Ok(NoiseModel { sigma_v_sq })
    }

    /// Noise level giving `tnr_db` for transmit power `power`.
    pub fn from_tnr_db(power: f64, tnr_db: f64) -> Result<Self> {
        Self::new(power / 10f64.powf(tnr_db / 10.0))
    }

    pub fn variance(&self) -> f64 {
        self.sigma_v_sq
    }

    pub fn sample(&self, rng: &mut RngStream) -> ComplexSample {
        let sd = (self.sigma_v_sq / 2.0).sqrt();
        let re = rng.gaussian();
        let im = rng.gaussian();
        ComplexSample::new(sd * re, sd * im)
    }
}

/// `d = hᴴt + v` with a fresh noise draw.
pub fn receive(h: &ChannelVector, t: &ChannelVector, noise: &NoiseModel, rng: &mut RngStream) -> Result<ComplexSample> {
    let v = noise.sample(rng);
    receive_with_noise(h, t, v)
}

/// `d = hᴴt + v` for a given noise sample.
pub fn receive_with_noise(h: &ChannelVector, t: &ChannelVector, v: ComplexSample) -> Result<ComplexSample> {
    Ok(inner_product(h, t)? + v)
}

/// True when `‖h − h_hat‖ > zeta`. Equality counts as fresh.
pub fn estimate_stale(h: &ChannelVector, h_hat: &ChannelVector, zeta: f64) -> Result<bool> {
    check_zeta(zeta)?;
    let err_sq = h.checked_sub(h_hat)?.norm_sq();
    Ok(exceeds(err_sq, zeta))
}

pub(crate) fn check_zeta(zeta: f64) -> Result<()> {
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(Error::Parameter(format!("zeta must be positive, got {zeta}")));
    }
    Ok(())
}

pub(crate) fn exceeds(err_sq: f64, zeta: f64) -> bool {
    err_sq.sqrt() > zeta
}
