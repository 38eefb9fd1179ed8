//! Complex vector arithmetic used by the estimation recursion and the link.

use std::fmt;
use std::ops::{Add, Index, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// One complex baseband sample.
pub type ComplexSample = Complex64;

/// A complex column vector with one entry per transmit antenna.
///
/// Entries are always finite and there is at least one of them.
#[derive(Clone, PartialEq)]
pub struct ChannelVector(Vec<ComplexSample>);

impl ChannelVector {
    pub fn new(entries: Vec<ComplexSample>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Parameter("channel vector must have at least one entry".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parameter("channel vector entries must be finite".into()));
        }
        Ok(ChannelVector(entries))
    }

    /// Builds a vector from `(re, im)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
    }

    /// Builds a vector with real entries.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&re| Complex64::new(re, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "channel vector needs at least one entry");
        ChannelVector(vec![Complex64::new(0.0, 0.0); n])
    }

    /// Unit basis vector `e_i` of length `n`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[ComplexSample] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ComplexSample> {
        self.0.iter()
    }

    /// `aᴴb`, conjugating `self`.
    pub fn inner(&self, other: &ChannelVector) -> Result<ComplexSample> {
        inner_product(self, other)
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self + alpha·x`, in place.
    pub fn axpy(&mut self, alpha: f64, x: &ChannelVector) -> Result<()> {
        check_len(self, x)?;
        for (a, b) in self.0.iter_mut().zip(&x.0) {
            *a += b * alpha;
        }
        Ok(())
    }

    pub fn scaled(&self, alpha: ComplexSample) -> ChannelVector {
        ChannelVector(self.0.iter().map(|z| z * alpha).collect())
    }

    pub fn checked_sub(&self, other: &ChannelVector) -> Result<ChannelVector> {
        check_len(self, other)?;
        Ok(ChannelVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn checked_add(&self, other: &ChannelVector) -> Result<ChannelVector> {
        check_len(self, other)?;
        Ok(ChannelVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }
}

impl fmt::Debug for ChannelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl Index<usize> for ChannelVector {
    type Output = ComplexSample;

    fn index(&self, i: usize) -> &ComplexSample {
        &self.0[i]
    }
}

impl<'a> Sub for &'a ChannelVector {
    type Output = ChannelVector;

    /// Panics on length mismatch; use [`ChannelVector::checked_sub`] otherwise.
    fn sub(self, rhs: &'a ChannelVector) -> ChannelVector {
        self.checked_sub(rhs).expect("length mismatch")
    }
}

impl<'a> Add for &'a ChannelVector {
    type Output = ChannelVector;

    fn add(self, rhs: &'a ChannelVector) -> ChannelVector {
        self.checked_add(rhs).expect("length mismatch")
    }
}

fn check_len(a: &ChannelVector, b: &ChannelVector) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

/// Returns `Σ conj(a_i)·b_i`.
pub fn inner_product(a: &ChannelVector, b: &ChannelVector) -> Result<ComplexSample> {
    check_len(a, b)?;
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| x.conj() * y).sum())
}

/// Returns `Σ |a_i|²`.
pub fn norm_sq(a: &ChannelVector) -> f64 {
    a.0.iter().map(|z| z.norm_sqr()).sum()
}

/// Draws `n` i.i.d. circularly-symmetric complex Gaussian samples with
/// `E|h|² = variance`.
pub fn draw_complex_gaussian(rng: &mut RngStream, n: usize, variance: f64) -> Result<ChannelVector> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::Parameter(format!("variance must be positive, got {variance}")));
    }
    if n == 0 {
        return Err(Error::Parameter("sample count must be at least 1".into()));
    }
    let sd = (variance / 2.0).sqrt();
    Ok(ChannelVector(
        (0..n)
            .map(|_| {
                let re = rng.gaussian();
                let im = rng.gaussian();
                Complex64::new(sd * re, sd * im)
            })
            .collect(),
    ))
}
