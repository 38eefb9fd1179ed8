//! Monte-Carlo experiments: BER sweeps comparing exact-CSI and estimated-CSI
//! beamforming, step-size histograms and convergence statistics.
//!
//! Each trial is an independent work unit whose random streams are derived
//! from `(master_seed, trial, sub_stream)`. Results are reduced in trial
//! order, so output is identical for any thread count.

use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::beamformer::{make_beamformer, modulate, Beamformer, Modulation, Scheme};
use crate::channel::NoiseModel;
use crate::error::{Error, Result};
use crate::estimator::{run_session_mimo, MimoTrace, TrainingKind, TrainingSequence, MAX_ITERATIONS};
use crate::quantizer::StepCodebook;
use crate::rng::RngStream;
use crate::vector::{draw_complex_gaussian, ChannelVector, ComplexSample};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Starting point `H_0` of each estimation session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// `H_0 = 0`.
    Zero,
    /// A stale estimate left over from an independent earlier epoch.
    PreviousEpoch,
}

impl std::str::FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(InitMode::Zero),
            "previous" | "previous-epoch" => Ok(InitMode::PreviousEpoch),
            other => Err(Error::Parse(format!("unknown init mode {other:?}"))),
        }
    }
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::Zero => "zero",
            InitMode::PreviousEpoch => "previous",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_t: usize,
    pub n_r: usize,
    pub modulation: Modulation,
    pub zeta_list: Vec<f64>,
    pub tnr_grid_db: Vec<f64>,
    pub trials_per_point: usize,
    pub max_iters: usize,
    pub quantizer_bits: u8,
    pub master_seed: u64,
    /// Data is paused while estimating. When false, one symbol per
    /// iteration is sent on the current estimate.
    pub interrupt_mode: bool,
    pub init: InitMode,
    pub training: TrainingKind,
    /// Training vectors per session; `None` means `64·n_t`.
    pub training_len: Option<usize>,
    /// Data symbols per channel realization and TNR point.
    pub block_symbols: usize,
    /// Histogram bin count.
    pub bins: usize,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_t: 2,
            n_r: 1,
            modulation: Modulation::bpsk(),
            zeta_list: vec![0.1, 0.3, 0.5],
            tnr_grid_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
            trials_per_point: 10_000,
            max_iters: 500,
            quantizer_bits: 3,
            master_seed: 1,
            interrupt_mode: true,
            init: InitMode::Zero,
            training: TrainingKind::Pn,
            training_len: None,
            block_symbols: 100,
            bins: 101,
            threads: 0,
        }
    }
}

impl SimConfig {
    /// One of the four experiment setups: `bpsk-nt2`, `bpsk-nt3`,
    /// `qpsk-nt2`, `qpsk-nt3`.
    pub fn preset(name: &str) -> Result<Self> {
        let (scheme, n_t) = match name {
            "bpsk-nt2" => (Scheme::Bpsk, 2),
            "bpsk-nt3" => (Scheme::Bpsk, 3),
            "qpsk-nt2" => (Scheme::Qpsk, 2),
            "qpsk-nt3" => (Scheme::Qpsk, 3),
            other => return Err(Error::Parse(format!("unknown preset {other:?}"))),
        };
        Ok(SimConfig {
            n_t,
            modulation: Modulation::new(scheme, 1.0)?,
            ..SimConfig::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_t", self.n_t),
            ("n_r", self.n_r),
            ("trials", self.trials_per_point),
            ("max_iters", self.max_iters),
            ("block_symbols", self.block_symbols),
            ("bins", self.bins),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Parameter(format!("{name} must be at least 1")));
            }
        }
        if self.n_r > 255 {
            return Err(Error::Parameter("n_r must be at most 255".into()));
        }
        if self.max_iters > MAX_ITERATIONS {
            return Err(Error::Parameter(format!("max_iters must be at most {MAX_ITERATIONS}")));
        }
        if !(1..=16).contains(&self.quantizer_bits) {
            return Err(Error::Parameter("quantizer_bits must be in 1..=16".into()));
        }
        if self.zeta_list.iter().any(|z| !(*z > 0.0 && z.is_finite())) {
            return Err(Error::Parameter("zeta values must be positive".into()));
        }
        if self.tnr_grid_db.iter().any(|t| !t.is_finite()) {
            return Err(Error::Parameter("tnr grid must be finite".into()));
        }
        if self.tnr_grid_db.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Parameter("tnr grid must be sorted".into()));
        }
        if self.training_len == Some(0) {
            return Err(Error::Parameter("training_len must be at least 1".into()));
        }
        Ok(())
    }

    pub fn training_len(&self) -> usize {
        self.training_len.unwrap_or(64 * self.n_t)
    }

    pub(crate) fn with_seed_offset(&self, offset: u64) -> Self {
        SimConfig {
            master_seed: self
                .master_seed
                .wrapping_add(offset.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
            ..self.clone()
        }
    }

    /// Runs `f` on a pool with the configured thread count.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }

    pub(crate) fn first_zeta(&self) -> Result<f64> {
        self.zeta_list
            .first()
            .copied()
            .ok_or_else(|| Error::Parameter("zeta list is empty".into()))
    }
}

const STREAM_SETUP: u64 = 0;

/// Channel, initial estimate and training shared by every session of a trial.
pub(crate) struct TrialSetup {
    pub h_rows: Vec<ChannelVector>,
    pub init_rows: Vec<ChannelVector>,
    pub training: Option<TrainingSequence>,
}

impl TrialSetup {
    pub fn training(&self) -> &TrainingSequence {
        self.training.as_ref().expect("setup drawn without training")
    }
}

pub(crate) fn trial_setup(config: &SimConfig, trial: u64) -> Result<TrialSetup> {
    setup_draws(config, trial, true)
}

// training is drawn last, so skipping it leaves the other draws unchanged
fn setup_draws(config: &SimConfig, trial: u64, with_training: bool) -> Result<TrialSetup> {
    let mut rng = RngStream::derive(config.master_seed, &[trial, STREAM_SETUP]);
    let h_rows = (0..config.n_r)
        .map(|_| draw_complex_gaussian(&mut rng, config.n_t, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let init_rows = (0..config.n_r)
        .map(|_| match config.init {
            InitMode::Zero => Ok(ChannelVector::zeros(config.n_t)),
            InitMode::PreviousEpoch => draw_complex_gaussian(&mut rng, config.n_t, 1.0),
        })
        .collect::<Result<Vec<_>>>()?;
    let training = if with_training {
        Some(TrainingSequence::generate(
            config.training,
            &mut rng,
            config.training_len(),
            config.n_t,
        )?)
    } else {
        None
    };
    Ok(TrialSetup {
        h_rows,
        init_rows,
        training,
    })
}

/// One seeded estimation session for trial `trial`.
pub(crate) fn trial_session(
    config: &SimConfig,
    trial: u64,
    codebook: Option<&StepCodebook>,
    zeta: f64,
) -> Result<MimoTrace> {
    let setup = trial_setup(config, trial)?;
    run_session_mimo(
        &setup.h_rows,
        &setup.init_rows,
        setup.training(),
        codebook,
        zeta,
        config.max_iters,
    )
}

/// One seeded session, as the trace command runs it.
pub fn seeded_session(config: &SimConfig, codebook: Option<&StepCodebook>) -> Result<MimoTrace> {
    config.validate()?;
    check_codebook(config, codebook)?;
    trial_session(config, 0, codebook, config.first_zeta()?)
}

fn check_codebook(config: &SimConfig, codebook: Option<&StepCodebook>) -> Result<()> {
    if let Some(cb) = codebook {
        if cb.bits() != config.quantizer_bits {
            return Err(Error::Parameter(format!(
                "codebook has {} bits, configuration expects {}",
                cb.bits(),
                config.quantizer_bits
            )));
        }
        if let Some(n_t) = cb.meta().n_t {
            if n_t != config.n_t {
                return Err(Error::Parameter(format!(
                    "codebook trained for n_t={n_t}, configuration has n_t={}",
                    config.n_t
                )));
            }
        }
    }
    Ok(())
}

/// Beamforming scheme of a BER curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamScheme {
    /// Exact channel at the transmitter.
    Obs,
    /// Estimate from a session stopped at threshold `zeta`.
    Sobs { zeta: f64 },
}

impl BeamScheme {
    pub fn zeta(&self) -> Option<f64> {
        match self {
            BeamScheme::Obs => None,
            BeamScheme::Sobs { zeta } => Some(*zeta),
        }
    }
}

impl fmt::Display for BeamScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BeamScheme::Obs => "OBS",
            BeamScheme::Sobs { .. } => "SOBS",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub tnr_db: f64,
    pub scheme: BeamScheme,
    pub bit_errors: u64,
    pub bits_sent: u64,
    pub ber: f64,
    pub ci95: (f64, f64),
}

impl BerPoint {
    fn new(tnr_db: f64, scheme: BeamScheme, bit_errors: u64, bits_sent: u64) -> Self {
        let ber = if bits_sent == 0 {
            0.0
        } else {
            bit_errors as f64 / bits_sent as f64
        };
        BerPoint {
            tnr_db,
            scheme,
            bit_errors,
            bits_sent,
            ber,
            ci95: wilson_interval(bit_errors, bits_sent, Z95),
        }
    }

    /// Wilson half-width at one standard error.
    pub fn wilson_se(&self) -> f64 {
        let (lo, hi) = wilson_interval(self.bit_errors, self.bits_sent, 1.0);
        0.5 * (hi - lo)
    }
}

/// Wilson score interval for `errors` successes out of `n` at quantile `z`.
pub fn wilson_interval(errors: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // exact at the boundaries, where rounding can push the bound past p
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub n_t: usize,
    pub modulation: Scheme,
    /// Grouped by TNR point: OBS first, then one SOBS row per zeta.
    pub points: Vec<BerPoint>,
    /// Sessions that hit `max_iters`, per zeta.
    pub unconverged: Vec<(f64, u64)>,
}

impl BerCurve {
    pub fn series(&self, scheme: BeamScheme) -> Vec<&BerPoint> {
        self.points.iter().filter(|p| p.scheme == scheme).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tnr_db,scheme,zeta,n_t,modulation,bits_sent,bit_errors,ber,ci_lo,ci_hi\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                p.tnr_db,
                p.scheme,
                p.scheme.zeta().map_or(String::new(), |z| z.to_string()),
                self.n_t,
                self.modulation,
                p.bits_sent,
                p.bit_errors,
                p.ber,
                p.ci95.0,
                p.ci95.1
            );
        }
        out
    }
}

struct TrialCounts {
    /// `[tnr][scheme]` → (bit errors, bits sent)
    counts: Vec<Vec<(u64, u64)>>,
    unconverged: Vec<u64>,
}

impl TrialCounts {
    fn add(&mut self, other: &TrialCounts) {
        for (acc, c) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            acc.0 += c.0;
            acc.1 += c.1;
        }
        for (acc, c) in self.unconverged.iter_mut().zip(&other.unconverged) {
            *acc += c;
        }
    }
}

/// BER versus TNR for exact-CSI beamforming and for beamforming on the
/// estimate of each session threshold in `config.zeta_list`.
///
/// Every TNR point of a trial sees the same channel; the exact-CSI and
/// estimated-CSI schemes share data bits and noise.
pub fn run_ber_sweep(config: &SimConfig, codebook: Option<&StepCodebook>) -> Result<BerCurve> {
    config.validate()?;
    check_codebook(config, codebook)?;
    if config.n_r != 1 {
        return Err(Error::Parameter(
            "BER sweeps model a single receive antenna (n_r = 1)".into(),
        ));
    }
    let mut schemes = vec![BeamScheme::Obs];
    schemes.extend(config.zeta_list.iter().map(|&zeta| BeamScheme::Sobs { zeta }));

    let n_points = config.tnr_grid_db.len();
    let empty = || TrialCounts {
        counts: vec![vec![(0u64, 0u64); schemes.len()]; n_points],
        unconverged: vec![0u64; config.zeta_list.len()],
    };
    // integer totals, so the reduction order cannot change the result
    let totals = config.install(|| {
        (0..config.trials_per_point as u64)
            .into_par_iter()
            .try_fold(empty, |mut acc, trial| {
                acc.add(&ber_trial(config, codebook, trial)?);
                Ok::<_, Error>(acc)
            })
            .try_reduce(empty, |mut a, b| {
                a.add(&b);
                Ok(a)
            })
    })??;
    let TrialCounts {
        counts: totals,
        unconverged,
    } = totals;

    let points = config
        .tnr_grid_db
        .iter()
        .zip(&totals)
        .flat_map(|(&tnr, row)| {
            schemes
                .iter()
                .zip(row)
                .map(move |(&s, &(e, n))| BerPoint::new(tnr, s, e, n))
        })
        .collect();
    Ok(BerCurve {
        n_t: config.n_t,
        modulation: config.modulation.scheme(),
        points,
        unconverged: config.zeta_list.iter().copied().zip(unconverged).collect(),
    })
}

/// Beamformer on `h_ref`; a zero estimate falls back to the first antenna.
fn beamformer_or_first_antenna(h_ref: &ChannelVector) -> Beamformer {
    make_beamformer(h_ref)
        .unwrap_or_else(|_| make_beamformer(&ChannelVector::basis(h_ref.len(), 0)).expect("unit basis vector"))
}

fn ber_trial(config: &SimConfig, codebook: Option<&StepCodebook>, trial: u64) -> Result<TrialCounts> {
    let setup = setup_draws(config, trial, !config.zeta_list.is_empty())?;
    let h = &setup.h_rows[0];
    let modulation = &config.modulation;
    let bps = modulation.bits_per_symbol();

    let mut gains = vec![make_beamformer(h)?.composite_gain(h)?];
    let mut unconverged = Vec::with_capacity(config.zeta_list.len());
    // gains used while estimating, for continuous transmission
    let mut live_gains: Vec<Vec<ComplexSample>> = vec![Vec::new()];
    for &zeta in &config.zeta_list {
        let trace = run_session_mimo(
            &setup.h_rows,
            &setup.init_rows,
            setup.training(),
            codebook,
            zeta,
            config.max_iters,
        )?;
        let row = &trace.rows[0];
        unconverged.push(u64::from(!trace.converged));
        gains.push(beamformer_or_first_antenna(&row.estimate).composite_gain(h)?);

        let mut live = Vec::new();
        if !config.interrupt_mode {
            let mut current = setup.init_rows[0].clone();
            for r in &row.records {
                if current.norm_sq() > 0.0 {
                    live.push(make_beamformer(&current)?.composite_gain(h)?);
                }
                current.axpy(r.mu_sent, setup.training().vector(r.k))?;
            }
        }
        live_gains.push(live);
    }

    let mut counts = Vec::with_capacity(config.tnr_grid_db.len());
    let mut bits = vec![0u8; config.block_symbols * bps];
    let mut noise = vec![ComplexSample::new(0.0, 0.0); config.block_symbols];
    let mut decided = Vec::with_capacity(bps);
    for (j, &tnr_db) in config.tnr_grid_db.iter().enumerate() {
        let mut rng = RngStream::derive(config.master_seed, &[trial, 1 + j as u64]);
        let awgn = NoiseModel::from_tnr_db(modulation.symbol_power(), tnr_db)?;
        for b in bits.iter_mut() {
            *b = rng.bit();
        }
        for v in noise.iter_mut() {
            *v = awgn.sample(&mut rng);
        }
        let symbols = modulate(&bits, modulation)?;

        let mut row = Vec::with_capacity(gains.len());
        for (s, &g) in gains.iter().enumerate() {
            let mut errors = 0u64;
            let mut sent = 0u64;
            for (i, &sym) in symbols.iter().enumerate() {
                errors += count_errors(
                    sym * g + noise[i],
                    g,
                    modulation,
                    &bits[i * bps..(i + 1) * bps],
                    &mut decided,
                )?;
                sent += bps as u64;
            }
            for &lg in &live_gains[s] {
                let label: Vec<u8> = (0..bps).map(|_| rng.bit()).collect();
                let sym = modulate(&label, modulation)?[0];
                let d = sym * lg + awgn.sample(&mut rng);
                errors += count_errors(d, lg, modulation, &label, &mut decided)?;
                sent += bps as u64;
            }
            row.push((errors, sent));
        }
        counts.push(row);
    }
    Ok(TrialCounts { counts, unconverged })
}

fn count_errors(
    d: ComplexSample,
    g: ComplexSample,
    modulation: &Modulation,
    truth: &[u8],
    scratch: &mut Vec<u8>,
) -> Result<u64> {
    scratch.clear();
    crate::beamformer::detect_into(d, g, modulation, scratch)?;
    Ok(scratch.iter().zip(truth).filter(|(a, b)| a != b).count() as u64)
}

/// Average BER of coherent detection with `n_t`-branch maximal-ratio
/// combining over i.i.d. unit-power Rayleigh fading.
///
/// QPSK with Gray labels is evaluated per bit, which halves the per-branch
/// SNR relative to BPSK at the same symbol power.
pub fn mrc_ber_oracle(tnr_linear: f64, n_t: usize, modulation: &Modulation) -> f64 {
    let gamma = tnr_linear / modulation.bits_per_symbol() as f64;
    let p = 0.5 * (1.0 - (gamma / (1.0 + gamma)).sqrt());
    let mut sum = 0.0;
    let mut binom = 1.0; // C(L-1+k, k)
    for k in 0..n_t {
        if k > 0 {
            binom *= (n_t - 1 + k) as f64 / k as f64;
        }
        sum += binom * (1.0 - p).powi(k as i32);
    }
    p.powi(n_t as i32) * sum
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
}

impl Histogram {
    /// Uniform bins over `mean ± 5·std`; samples outside land in the end bins.
    pub fn from_samples(samples: &[f64], bins: usize) -> Result<Self> {
        if samples.is_empty() || bins == 0 {
            return Err(Error::Parameter("histogram needs samples and at least one bin".into()));
        }
        let (mean, std, skewness) = moments(samples);
        let half = if std > 0.0 { 5.0 * std } else { 0.5 };
        let lo = mean - half;
        let width = 2.0 * half / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for &x in samples {
            let i = ((x - lo) / width).floor();
            let i = if i < 0.0 { 0 } else { (i as usize).min(bins - 1) };
            counts[i] += 1;
        }
        Ok(Histogram {
            edges,
            counts,
            mean,
            std,
            skewness,
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index of the fullest bin (first one on ties).
    pub fn mode_bin(&self) -> usize {
        let max = *self.counts.iter().max().unwrap();
        self.counts.iter().position(|&c| c == max).unwrap()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", self.edges[i], self.edges[i + 1], c);
        }
        out
    }
}

/// Mean, population standard deviation and skewness `g1`.
pub fn moments(samples: &[f64]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = samples.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let std = m2.sqrt();
    let skew = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    (mean, std, skew)
}

/// Histogram of exact step sizes over `sessions` seeded sessions.
pub fn run_histogram(config: &SimConfig, sessions: usize) -> Result<Histogram> {
    let samples = crate::quantizer::collect_step_samples(config, sessions)?;
    if samples.is_empty() {
        return Err(Error::Parameter(
            "no step sizes collected; every session started converged".into(),
        ));
    }
    Histogram::from_samples(&samples, config.bins)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub zeta: f64,
    pub n_t: usize,
    pub quantized: bool,
    pub sessions: usize,
    /// Unconverged sessions count with `max_iters`.
    pub median_iters: f64,
    pub mean_iters: f64,
    pub frac_converged: f64,
    pub feedback_bits_mean: f64,
}

pub fn convergence_csv(records: &[ConvergenceRecord]) -> String {
    let mut out =
        String::from("zeta,n_t,quantized,sessions,median_iters,mean_iters,frac_converged,feedback_bits_mean\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.zeta,
            r.n_t,
            r.quantized,
            r.sessions,
            r.median_iters,
            r.mean_iters,
            r.frac_converged,
            r.feedback_bits_mean
        );
    }
    out
}

/// Session length and feedback cost for every zeta in the configuration.
pub fn convergence_stats(
    config: &SimConfig,
    codebook: Option<&StepCodebook>,
    sessions: usize,
) -> Result<Vec<ConvergenceRecord>> {
    config.validate()?;
    check_codebook(config, codebook)?;
    if sessions == 0 {
        return Err(Error::Parameter("sessions must be at least 1".into()));
    }
    config
        .zeta_list
        .iter()
        .map(|&zeta| {
            let outcomes: Vec<(usize, bool, usize)> = config.install(|| {
                (0..sessions as u64)
                    .into_par_iter()
                    .map(|trial| {
                        let t = trial_session(config, trial, codebook, zeta)?;
                        Ok((t.iterations, t.converged, t.feedback_bits()))
                    })
                    .collect::<Result<_>>()
            })??;
            let mut iters: Vec<usize> = outcomes.iter().map(|o| o.0).collect();
            iters.sort_unstable();
            let n = sessions as f64;
            let median = if sessions % 2 == 1 {
                iters[sessions / 2] as f64
            } else {
                0.5 * (iters[sessions / 2 - 1] + iters[sessions / 2]) as f64
            };
            Ok(ConvergenceRecord {
                zeta,
                n_t: config.n_t,
                quantized: codebook.is_some(),
                sessions,
                median_iters: median,
                mean_iters: iters.iter().sum::<usize>() as f64 / n,
                frac_converged: outcomes.iter().filter(|o| o.1).count() as f64 / n,
                feedback_bits_mean: outcomes.iter().map(|o| o.2).sum::<usize>() as f64 / n,
            })
        })
        .collect()
}
