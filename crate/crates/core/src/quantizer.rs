//! Lloyd-Max scalar quantizer for step-size feedback.
//!
//! Codebooks are designed offline from a population of exact step sizes and
//! then frozen. The text form is
//!
//! ```text
//! bits=3
//! <levels, space separated>
//! <thresholds, space separated>
//! n_t=2 zeta=0.1 sample_count=100000 distortion=0.0123
//! ```
//!
//! Reals are written in shortest round-trip form, so a saved codebook loads
//! back bit-exactly.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::{trial_session, SimConfig};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ROUNDS: usize = 500;

/// Provenance recorded with a designed codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub n_t: Option<usize>,
    pub zeta: Option<f64>,
    pub sample_count: usize,
    /// Mean squared error on the training samples.
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepCodebook {
    levels: Vec<f64>,
    thresholds: Vec<f64>,
    bits: u8,
    meta: TrainingMeta,
}

impl StepCodebook {
    /// Builds a codebook from explicit levels; thresholds are the midpoints.
    pub fn from_levels(levels: Vec<f64>, meta: TrainingMeta) -> Result<Self> {
        let n = levels.len();
        if n < 2 || !n.is_power_of_two() || n > 1 << 16 {
            return Err(Error::Parameter(format!("level count {n} is not 2^b with 1 ≤ b ≤ 16")));
        }
        let thresholds = midpoints(&levels);
        let cb = StepCodebook {
            bits: n.trailing_zeros() as u8,
            levels,
            thresholds,
            meta,
        };
        cb.validate()?;
        Ok(cb)
    }

    fn validate(&self) -> Result<()> {
        if self.levels.iter().chain(&self.thresholds).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("codebook values must be finite".into()));
        }
        for (i, t) in self.thresholds.iter().enumerate() {
            if !(self.levels[i] < *t && *t < self.levels[i + 1]) {
                return Err(Error::Parameter(format!(
                    "threshold {i} does not separate levels {i} and {}",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    /// Cell index of `mu`. Values on a threshold go to the lower cell;
    /// values beyond the outer levels saturate.
    pub fn encode(&self, mu: f64) -> usize {
        self.thresholds.partition_point(|&t| t < mu)
    }

    pub fn decode(&self, index: usize) -> Result<f64> {
        self.levels.get(index).copied().ok_or(Error::IndexOutOfRange {
            index,
            len: self.levels.len(),
        })
    }

    pub fn quantize(&self, mu: f64) -> f64 {
        self.levels[self.encode(mu)]
    }

    /// Mean squared quantization error over `samples`.
    pub fn distortion(&self, samples: &[f64]) -> f64 {
        let total: f64 = samples.iter().map(|&x| (x - self.quantize(x)).powi(2)).sum();
        total / samples.len() as f64
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        let _ = writeln!(out, "bits={}", self.bits);
        let _ = writeln!(out, "{}", join(&self.levels));
        let _ = writeln!(out, "{}", join(&self.thresholds));
        let _ = writeln!(
            out,
            "n_t={} zeta={} sample_count={} distortion={}",
            self.meta.n_t.map_or("none".to_string(), |n| n.to_string()),
            self.meta.zeta.map_or("none".to_string(), |z| z.to_string()),
            self.meta.sample_count,
            self.meta.distortion
        );
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse(format!("missing {what} line")));

        let bits: u8 = next("bits")?
            .strip_prefix("bits=")
            .ok_or_else(|| Error::Parse("first line must be bits=<b>".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bits: {e}")))?;
        let levels = parse_reals(next("levels")?)?;
        let thresholds = parse_reals(next("thresholds")?)?;

        let mut n_t = None;
        let mut zeta = None;
        let mut sample_count = None;
        let mut distortion = None;
        for field in next("metadata")?.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad metadata field {field:?}")))?;
            let bad = |e: &dyn std::fmt::Display| Error::Parse(format!("{key}: {e}"));
            match key {
                "n_t" if value != "none" => n_t = Some(value.parse().map_err(|e| bad(&e))?),
                "zeta" if value != "none" => zeta = Some(value.parse().map_err(|e| bad(&e))?),
                "n_t" | "zeta" => {}
                "sample_count" => sample_count = Some(value.parse().map_err(|e| bad(&e))?),
                "distortion" => distortion = Some(value.parse().map_err(|e| bad(&e))?),
                _ => return Err(Error::Parse(format!("unknown metadata key {key:?}"))),
            }
        }
        if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
            return Err(Error::Parse(format!("unexpected trailing line {extra:?}")));
        }

        let expected = 1usize
            .checked_shl(bits as u32)
            .filter(|_| (1..=16).contains(&bits))
            .ok_or_else(|| Error::Parse(format!("bits={bits} out of range")))?;
        if levels.len() != expected || thresholds.len() != expected - 1 {
            return Err(Error::Parse(format!(
                "bits={bits} needs {expected} levels and {} thresholds, got {} and {}",
                expected - 1,
                levels.len(),
                thresholds.len()
            )));
        }
        let cb = StepCodebook {
            levels,
            thresholds,
            bits,
            meta: TrainingMeta {
                n_t,
                zeta,
                sample_count: sample_count.ok_or_else(|| Error::Parse("missing sample_count".into()))?,
                distortion: distortion.ok_or_else(|| Error::Parse("missing distortion".into()))?,
            },
        };
        cb.validate()?;
        Ok(cb)
    }
}

fn parse_reals(line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
        .collect()
}

fn midpoints(levels: &[f64]) -> Vec<f64> {
    levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// A designed codebook plus the distortion measured at every round.
#[derive(Debug, Clone)]
pub struct LloydDesign {
    pub codebook: StepCodebook,
    pub history: Vec<f64>,
}

/// Lloyd design: alternate nearest-neighbor partition and centroid update
/// until the relative distortion change falls below `tol`.
pub fn design_codebook(samples: &[f64], bits: u8, tol: f64, max_rounds: usize) -> Result<StepCodebook> {
    design_codebook_traced(samples, bits, tol, max_rounds).map(|d| d.codebook)
}

pub fn design_codebook_traced(samples: &[f64], bits: u8, tol: f64, max_rounds: usize) -> Result<LloydDesign> {
    if !(1..=16).contains(&bits) {
        return Err(Error::Parameter(format!("bits must be in 1..=16, got {bits}")));
    }
    if tol.is_nan() || tol < 0.0 || max_rounds == 0 {
        return Err(Error::Parameter(
            "tol must be non-negative and max_rounds positive".into(),
        ));
    }
    let cells = 1usize << bits;
    if samples.len() < cells {
        return Err(Error::TooFewSamples {
            needed: cells,
            got: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parameter("samples must be finite".into()));
    }

    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let distinct = 1 + sorted.windows(2).filter(|w| w[0] != w[1]).count();
    if distinct < cells {
        return Err(Error::EmptyCell { cells, distinct });
    }
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let std = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let nudge = 1e-6 * std;

    // equiprobable empirical quantiles
    let mut levels: Vec<f64> = (0..cells)
        .map(|i| quantile(&sorted, (i as f64 + 0.5) / cells as f64))
        .collect();
    fill_levels(&mut levels, cells, nudge);

    let mut history = Vec::new();
    let mut repairs = 0;
    loop {
        let cuts = partition(&sorted, &levels);
        let d = cell_distortions(&sorted, &levels, &cuts).iter().sum::<f64>() / n as f64;
        let done = match history.last() {
            Some(&prev) => prev - d <= tol * prev || d == 0.0,
            None => d == 0.0,
        };
        history.push(d);
        if done || history.len() > max_rounds {
            break;
        }

        let mut empty = Vec::new();
        for i in 0..cells {
            let cell = &sorted[cuts[i]..cuts[i + 1]];
            if cell.is_empty() {
                empty.push(i);
            } else {
                levels[i] = cell.iter().sum::<f64>() / cell.len() as f64;
            }
        }
        if !empty.is_empty() {
            repairs += 1;
            if repairs > 10 * cells + max_rounds {
                return Err(Error::EmptyCell { cells, distinct });
            }
            split_cells(&sorted, &mut levels, &cuts, &empty, nudge);
        }
        levels.sort_by(f64::total_cmp);
        fill_levels(&mut levels, cells, nudge);
    }

    let distortion = *history.last().unwrap();
    let codebook = StepCodebook::from_levels(
        levels,
        TrainingMeta {
            n_t: None,
            zeta: None,
            sample_count: n,
            distortion,
        },
    )?;
    Ok(LloydDesign { codebook, history })
}

/// Drops duplicate levels and pads above the largest until there are `cells`.
fn fill_levels(levels: &mut Vec<f64>, cells: usize, nudge: f64) {
    levels.dedup();
    while levels.len() < cells {
        let last = *levels.last().unwrap();
        levels.push(last + nudge.max(f64::EPSILON * last.abs().max(1.0)));
    }
}

/// Linearly interpolated empirical quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Cell boundaries in the sorted samples: cell `i` is `cuts[i]..cuts[i+1]`.
fn partition(sorted: &[f64], levels: &[f64]) -> Vec<usize> {
    let mut cuts = Vec::with_capacity(levels.len() + 1);
    cuts.push(0);
    for t in midpoints(levels) {
        cuts.push(sorted.partition_point(|&x| x <= t));
    }
    cuts.push(sorted.len());
    cuts
}

fn cell_distortions(sorted: &[f64], levels: &[f64], cuts: &[usize]) -> Vec<f64> {
    levels
        .iter()
        .enumerate()
        .map(|(i, &c)| sorted[cuts[i]..cuts[i + 1]].iter().map(|x| (x - c).powi(2)).sum())
        .collect()
}

/// Replaces each empty cell's level by splitting the currently worst cell.
fn split_cells(sorted: &[f64], levels: &mut [f64], cuts: &[usize], empty: &[usize], nudge: f64) {
    let mut dist = cell_distortions(sorted, levels, cuts);
    for &e in empty {
        dist[e] = f64::NEG_INFINITY;
    }
    for &e in empty {
        let worst = (0..levels.len()).max_by(|&a, &b| dist[a].total_cmp(&dist[b])).unwrap();
        let c = levels[worst];
        levels[worst] = c - nudge;
        levels[e] = c + nudge;
        dist[worst] = f64::NEG_INFINITY;
    }
}

/// Signal-to-quantization-noise ratio in dB over `samples`.
pub fn sqnr_db(codebook: &StepCodebook, samples: &[f64]) -> f64 {
    let power = samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64;
    10.0 * (power / codebook.distortion(samples)).log10()
}

/// Exact step sizes observed in `trials` seeded ideal-feedback sessions.
///
/// Uses the first entry of `config.zeta_list` as the stopping threshold and
/// collects the steps of every receive antenna, in trial order.
pub fn collect_step_samples(config: &SimConfig, trials: usize) -> Result<Vec<f64>> {
    config.validate()?;
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    let zeta = config.first_zeta()?;
    let per_trial: Vec<Vec<f64>> = config.install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|trial| {
                let trace = trial_session(config, trial, None, zeta)?;
                Ok(trace
                    .rows
                    .iter()
                    .flat_map(|row| row.records.iter().map(|r| r.mu_opt))
                    .collect())
            })
            .collect::<Result<_>>()
    })??;
    Ok(per_trial.into_iter().flatten().collect())
}

/// Trains a codebook on the step sizes of the configuration it will serve.
pub fn design_for_config(
    config: &SimConfig,
    target_samples: usize,
    tol: f64,
    max_rounds: usize,
) -> Result<StepCodebook> {
    // pilot run to size the trial count
    let pilot = collect_step_samples(config, 64)?;
    let per_trial = (pilot.len() as f64 / 64.0).max(1.0);
    let trials = ((target_samples as f64 / per_trial).ceil() as usize).max(1);
    let mut samples = collect_step_samples(config, trials)?;
    let mut extra = trials as u64;
    while samples.len() < target_samples {
        let more = collect_step_samples(&config.with_seed_offset(extra), trials.div_ceil(4).max(1))?;
        extra += 1;
        samples.extend(more);
    }
    let mut cb = design_codebook(&samples, config.quantizer_bits, tol, max_rounds)?;
    cb.meta.n_t = Some(config.n_t);
    cb.meta.zeta = Some(config.first_zeta()?);
    Ok(cb)
}
