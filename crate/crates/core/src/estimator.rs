//! Adaptive partial-feedback channel estimation.
//!
//! Both ends run the recursion `H_k = H_{k-1} + μ_k X_k` over a shared
//! training sequence. The receiver, which knows the true channel, computes
//! the error-minimizing step
//!
//! ```text
//! μ_k = Re(X_kᴴ(H − H_{k-1})) / ‖X_k‖²
//! ```
//!
//! quantizes it and feeds the index back. Both ends then advance with the
//! dequantized value, so the receiver's mirror of `H_k` and the transmitter's
//! estimate stay bit-identical.
//!
//! With the exact step the squared error drops by `Re²(X_kᴴ e)/‖X_k‖²` per
//! iteration, and any step strictly between 0 and `2μ_k` decreases it.

use std::fmt::Write as _;

use crate::channel::{check_zeta, exceeds};
use crate::error::{Error, Result};
use crate::feedback::{decode_message, encode_message, FeedbackMessage};
use crate::quantizer::StepCodebook;
use crate::rng::RngStream;
use crate::vector::{draw_complex_gaussian, ChannelVector, ComplexSample};

/// Largest iteration count representable in a feedback frame.
pub const MAX_ITERATIONS: usize = u16::MAX as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    Estimating,
    Ended,
}

/// One party's view of the estimation recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    h_est: ChannelVector,
    k: usize,
    phase: Phase,
}

impl EstimatorState {
    /// Idle state holding `h_hat` as the current channel estimate.
    pub fn new(h_hat: ChannelVector) -> Self {
        EstimatorState {
            h_est: h_hat,
            k: 0,
            phase: Phase::Idle,
        }
    }

    pub fn estimate(&self) -> &ChannelVector {
        &self.h_est
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Enters `Estimating` with `H_0 = h_init`.
    pub fn start(&mut self, h_init: &ChannelVector) -> Result<()> {
        if self.phase != Phase::Idle {
            return Err(Error::Protocol(format!("cannot start from {:?}", self.phase)));
        }
        if h_init.len() != self.h_est.len() {
            return Err(Error::Dimension {
                expected: self.h_est.len(),
                got: h_init.len(),
            });
        }
        self.h_est = h_init.clone();
        self.k = 0;
        self.phase = Phase::Estimating;
        Ok(())
    }

    pub fn finish(&mut self) -> Result<()> {
        if self.phase != Phase::Estimating {
            return Err(Error::Protocol(format!("cannot end from {:?}", self.phase)));
        }
        self.phase = Phase::Ended;
        Ok(())
    }

    /// Back to normal operation, keeping the final estimate.
    pub fn resume(&mut self) -> Result<()> {
        if self.phase != Phase::Ended {
            return Err(Error::Protocol(format!("cannot resume from {:?}", self.phase)));
        }
        self.phase = Phase::Idle;
        Ok(())
    }

    /// `H_k = H_{k-1} + mu·x`, in place.
    pub fn step(&mut self, x: &ChannelVector, mu: f64) -> Result<()> {
        if self.phase != Phase::Estimating {
            return Err(Error::Protocol(format!("step while {:?}", self.phase)));
        }
        if !mu.is_finite() {
            return Err(Error::Parameter(format!("step size must be finite, got {mu}")));
        }
        self.h_est.axpy(mu, x)?;
        self.k += 1;
        Ok(())
    }
}

/// Returns the state after one recursion step.
pub fn apply_step(state: &EstimatorState, x_k: &ChannelVector, mu: f64) -> Result<EstimatorState> {
    let mut next = state.clone();
    next.step(x_k, mu)?;
    Ok(next)
}

/// Training vectors known to both ends, reused cyclically.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSequence {
    vectors: Vec<ChannelVector>,
}

/// How training vectors are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingKind {
    /// i.i.d. CN(0, 1) entries.
    Gaussian,
    /// Entries drawn uniformly from `(±1 ± j)/√2`.
    Pn,
}

impl TrainingSequence {
    pub fn new(vectors: Vec<ChannelVector>) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::Parameter("training sequence is empty".into()))?;
        let n_t = first.len();
        for v in &vectors {
            if v.len() != n_t {
                return Err(Error::Dimension {
                    expected: n_t,
                    got: v.len(),
                });
            }
            if v.norm_sq() <= 0.0 {
                return Err(Error::DegenerateTraining);
            }
        }
        Ok(TrainingSequence { vectors })
    }

    pub fn generate(kind: TrainingKind, rng: &mut RngStream, len: usize, n_t: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Parameter("training length must be at least 1".into()));
        }
        let vectors = (0..len)
            .map(|_| match kind {
                TrainingKind::Gaussian => draw_complex_gaussian(rng, n_t, 1.0),
                TrainingKind::Pn => {
                    let a = std::f64::consts::FRAC_1_SQRT_2;
                    ChannelVector::new(
                        (0..n_t)
                            .map(|_| {
                                let re = if rng.bit() == 0 { a } else { -a };
                                let im = if rng.bit() == 0 { a } else { -a };
                                ComplexSample::new(re, im)
                            })
                            .collect(),
                    )
                }
            })
            .collect::<Result<Vec<_>>>()?;
        // a Gaussian draw of exactly zero norm has probability zero but is rejected anyway
        Self::new(vectors)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn n_t(&self) -> usize {
        self.vectors[0].len()
    }

    /// `X_k` for `k ≥ 1`, wrapping around after the last vector.
    pub fn vector(&self, k: usize) -> &ChannelVector {
        assert!(k >= 1, "training vectors are indexed from 1");
        &self.vectors[(k - 1) % self.vectors.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub mu_opt: f64,
    /// `‖H − H_k‖²` after applying `mu_opt` exactly.
    pub predicted_error_sq: f64,
}

fn projection(h_true: &ChannelVector, h_est: &ChannelVector, x_k: &ChannelVector) -> Result<(f64, f64, f64)> {
    let x_sq = x_k.norm_sq();
    if x_sq <= 0.0 {
        return Err(Error::DegenerateTraining);
    }
    let e = h_true.checked_sub(h_est)?;
    let num = x_k.inner(&e)?.re;
    Ok((num, x_sq, e.norm_sq()))
}

/// Receiver-side optimal step and the error it leaves behind.
pub fn optimal_step(h_true: &ChannelVector, h_est: &ChannelVector, x_k: &ChannelVector) -> Result<StepResult> {
    let (num, x_sq, e_sq) = projection(h_true, h_est, x_k)?;
    Ok(StepResult {
        mu_opt: num / x_sq,
        predicted_error_sq: e_sq - num * num / x_sq,
    })
}

/// Open interval of step sizes that strictly decrease the error.
///
/// `(0, 2μ*)` for positive `μ*`, `(2μ*, 0)` for negative, and the empty
/// interval `(0, 0)` when the residual is orthogonal to the training vector.
pub fn admissible_interval(h_true: &ChannelVector, h_est: &ChannelVector, x_k: &ChannelVector) -> Result<(f64, f64)> {
    let mu = optimal_step(h_true, h_est, x_k)?.mu_opt;
    Ok(if mu > 0.0 {
        (0.0, 2.0 * mu)
    } else if mu < 0.0 {
        (2.0 * mu, 0.0)
    } else {
        (0.0, 0.0)
    })
}

/// One recursion step as seen by the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub mu_opt: f64,
    pub mu_sent: f64,
    /// Quantizer index fed back, absent with ideal feedback.
    pub index: Option<u16>,
    /// `‖H − H_k‖²` after the step.
    pub err_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionTrace {
    pub initial_err_sq: f64,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    /// Number of steps taken, `n` when converged.
    pub iterations: usize,
    /// Transmitter's final estimate.
    pub estimate: ChannelVector,
    /// Receiver's mirror of the transmitter's estimate.
    pub mirror_estimate: ChannelVector,
    /// Reverse-link frames. Step frames are only produced for quantized
    /// sessions; ideal feedback carries unframed real values.
    pub messages: Vec<FeedbackMessage>,
    /// Index width, or `None` for ideal feedback.
    pub bits: Option<u8>,
}

impl SessionTrace {
    pub fn final_err_sq(&self) -> f64 {
        self.records.last().map_or(self.initial_err_sq, |r| r.err_sq)
    }

    /// Feedback payload in bits; ideal steps are counted as 64-bit floats.
    pub fn feedback_bits(&self) -> usize {
        self.iterations * self.bits.map_or(64, usize::from)
    }

    /// `k,mu_opt,mu_sent,err_sq`, one row per step.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,mu_opt,mu_sent,err_sq\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{}", r.k, r.mu_opt, r.mu_sent, r.err_sq);
        }
        out
    }
}

/// Result of a multi-antenna session: one trace per receive antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoTrace {
    pub rows: Vec<SessionTrace>,
    pub converged: bool,
    pub iterations: usize,
    /// Shared reverse-link frames carrying one index per row.
    pub messages: Vec<FeedbackMessage>,
}

impl MimoTrace {
    pub fn feedback_bits(&self) -> usize {
        self.rows.iter().map(SessionTrace::feedback_bits).sum()
    }
}

/// Runs one estimation session for a single receive antenna.
///
/// With `codebook = None` the exact step is fed back. Non-convergence
/// within `max_iters` is reported in the trace, not as an error.
pub fn run_session(
    h_true: &ChannelVector,
    h_init: &ChannelVector,
    training: &TrainingSequence,
    codebook: Option<&StepCodebook>,
    zeta: f64,
    max_iters: usize,
) -> Result<SessionTrace> {
    let mimo = run_session_mimo(
        std::slice::from_ref(h_true),
        std::slice::from_ref(h_init),
        training,
        codebook,
        zeta,
        max_iters,
    )?;
    let mut trace = mimo.rows.into_iter().next().expect("one row");
    trace.messages = mimo.messages;
    Ok(trace)
}

/// Runs `n_R` recursions in lockstep over a shared training sequence.
///
/// Every iteration feeds back one index per row; the session ends once all
/// rows are within `zeta` of their true channel at the same iteration.
pub fn run_session_mimo(
    h_true_rows: &[ChannelVector],
    h_init_rows: &[ChannelVector],
    training: &TrainingSequence,
    codebook: Option<&StepCodebook>,
    zeta: f64,
    max_iters: usize,
) -> Result<MimoTrace> {
    check_zeta(zeta)?;
    if max_iters > MAX_ITERATIONS {
        return Err(Error::Parameter(format!(
            "max_iters {max_iters} exceeds the {MAX_ITERATIONS} frame counter"
        )));
    }
    if h_true_rows.is_empty() {
        return Err(Error::Parameter("at least one receive antenna required".into()));
    }
    if h_true_rows.len() > 255 {
        return Err(Error::Parameter("at most 255 receive antennas per frame".into()));
    }
    if h_init_rows.len() != h_true_rows.len() {
        return Err(Error::Dimension {
            expected: h_true_rows.len(),
            got: h_init_rows.len(),
        });
    }
    let n_t = training.n_t();
    for row in h_true_rows.iter().chain(h_init_rows) {
        if row.len() != n_t {
            return Err(Error::Dimension {
                expected: n_t,
                got: row.len(),
            });
        }
    }
    let bits = codebook.map(StepCodebook::bits);

    // transmitter estimates and the receiver's mirrors, one per row
    let mut tx: Vec<EstimatorState> = h_init_rows.iter().map(|h| EstimatorState::new(h.clone())).collect();
    let mut rx = tx.clone();
    for (t, (r, h0)) in tx.iter_mut().zip(rx.iter_mut().zip(h_init_rows)) {
        t.start(h0)?;
        r.start(h0)?;
    }

    let mut messages = vec![FeedbackMessage::StartEstimation];
    let initial: Vec<f64> = h_true_rows
        .iter()
        .zip(&rx)
        .map(|(h, r)| h.checked_sub(r.estimate()).map(|e| e.norm_sq()))
        .collect::<Result<_>>()?;
    let mut records: Vec<Vec<IterationRecord>> = vec![Vec::new(); h_true_rows.len()];
    let mut current = initial.clone();
    let mut k = 0;
    let mut converged = current.iter().all(|&e| !exceeds(e, zeta));

    while !converged && k < max_iters {
        k += 1;
        let x = training.vector(k);

        // receiver: optimal steps from the mirrored estimates
        let steps: Vec<StepResult> = h_true_rows
            .iter()
            .zip(&rx)
            .map(|(h, r)| optimal_step(h, r.estimate(), x))
            .collect::<Result<_>>()?;

        // reverse link, then both ends advance by the same value
        let (sent, indices): (Vec<f64>, Vec<Option<u16>>) = match codebook {
            None => (steps.iter().map(|s| s.mu_opt).collect(), vec![None; steps.len()]),
            Some(cb) => {
                let idx: Vec<u16> = steps.iter().map(|s| cb.encode(s.mu_opt) as u16).collect();
                let msg = FeedbackMessage::Step {
                    iteration: k as u16,
                    indices: idx.clone(),
                };
                let frame = encode_message(&msg, cb.bits())?;
                let received = match decode_message(&frame, cb.bits())? {
                    FeedbackMessage::Step { indices, .. } => indices,
                    other => return Err(Error::Protocol(format!("expected step frame, got {other:?}"))),
                };
                messages.push(msg);
                let mu = received
                    .iter()
                    .map(|&i| cb.decode(i as usize))
                    .collect::<Result<Vec<_>>>()?;
                (mu, idx.into_iter().map(Some).collect())
            }
        };

        for row in 0..h_true_rows.len() {
            tx[row].step(x, sent[row])?;
            rx[row].step(x, sent[row])?;
            let err_sq = h_true_rows[row].checked_sub(rx[row].estimate())?.norm_sq();
            current[row] = err_sq;
            records[row].push(IterationRecord {
                k,
                mu_opt: steps[row].mu_opt,
                mu_sent: sent[row],
                index: indices[row],
                err_sq,
            });
        }
        converged = current.iter().all(|&e| !exceeds(e, zeta));
    }

    if converged {
        messages.push(FeedbackMessage::EndEstimation { iteration: k as u16 });
        for (t, r) in tx.iter_mut().zip(rx.iter_mut()) {
            t.finish()?;
            r.finish()?;
        }
    }

    let rows = records
        .into_iter()
        .zip(initial)
        .zip(tx.iter().zip(&rx))
        .map(|((records, initial_err_sq), (t, r))| SessionTrace {
            initial_err_sq,
            records,
            converged,
            iterations: k,
            estimate: t.estimate().clone(),
            mirror_estimate: r.estimate().clone(),
            messages: Vec::new(),
            bits,
        })
        .collect();

    Ok(MimoTrace {
        rows,
        converged,
        iterations: k,
        messages,
    })
}
