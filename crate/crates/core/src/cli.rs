//! Configuration and command bodies behind the `csi-feedback` binary.
//!
//! Configuration files are flat `key = value` text; `#` starts a comment.
//! Every key can also be given on the command line as `--key-name`, with
//! underscores replaced by dashes. Precedence, lowest first: built-in
//! defaults, `preset`, the config file, command-line flags.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::beamformer::{Modulation, Scheme};
use crate::error::{Error, Result};
use crate::estimator::TrainingKind;
use crate::feedback::{encode_message, to_hex, FeedbackMessage};
use crate::harness::{self, SimConfig};
use crate::quantizer::{self, StepCodebook, DEFAULT_MAX_ROUNDS, DEFAULT_TOL};

/// Every recognised configuration key.
pub const KEYS: &[&str] = &[
    "preset",
    "n_t",
    "n_r",
    "modulation",
    "symbol_power",
    "zeta",
    "tnr_db",
    "trials",
    "max_iters",
    "quantizer_bits",
    "seed",
    "interrupt",
    "init",
    "training",
    "training_len",
    "block_symbols",
    "bins",
    "threads",
    "sessions",
    "training_samples",
    "lloyd_tol",
    "lloyd_max_rounds",
    "codebook",
    "samples_in",
    "out",
];

/// Command-line flag for a configuration key.
pub fn flag_for(key: &str) -> String {
    format!("--{}", key.replace('_', "-"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub sim: SimConfig,
    /// Sessions for histograms, convergence statistics.
    pub sessions: usize,
    /// Minimum step-size samples used to train a codebook.
    pub training_samples: usize,
    pub lloyd_tol: f64,
    pub lloyd_max_rounds: usize,
    /// Codebook file; absent means ideal feedback.
    pub codebook: Option<PathBuf>,
    /// Whitespace-separated reals to train on instead of simulated steps.
    pub samples_in: Option<PathBuf>,
    /// Output path, `-` for standard output.
    pub out: String,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            sim: SimConfig::default(),
            sessions: 10_000,
            training_samples: 100_000,
            lloyd_tol: DEFAULT_TOL,
            lloyd_max_rounds: DEFAULT_MAX_ROUNDS,
            codebook: None,
            samples_in: None,
            out: "-".into(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Parse(format!("{key} = {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Parse(format!("{key} = {value:?}: expected true or false"))),
    }
}

/// `lo:step:hi` (inclusive) or a comma-separated list.
pub fn parse_grid(value: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parse("tnr_db", parts[0])?;
        let step: f64 = parse("tnr_db", parts[1])?;
        let hi: f64 = parse("tnr_db", parts[2])?;
        if step.is_nan() || step <= 0.0 || hi < lo {
            return Err(Error::Parse(format!(
                "tnr_db range {value:?} needs step > 0 and hi ≥ lo"
            )));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        if count > 10_000 {
            return Err(Error::Parse(format!("tnr_db range {value:?} has too many points")));
        }
        return Ok((0..count).map(|i| lo + step * i as f64).collect());
    }
    if parts.len() != 1 {
        return Err(Error::Parse(format!("tnr_db {value:?}: use lo:step:hi or a list")));
    }
    value.split(',').map(|v| parse("tnr_db", v.trim())).collect()
}

impl CliConfig {
    /// Sets one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let sim = &mut self.sim;
        match key {
            "preset" => {
                let threads = sim.threads;
                *sim = SimConfig::preset(value)?;
                sim.threads = threads;
            }
            "n_t" => sim.n_t = parse(key, value)?,
            "n_r" => sim.n_r = parse(key, value)?,
            "modulation" => {
                let scheme: Scheme = value.parse()?;
                sim.modulation = Modulation::new(scheme, sim.modulation.symbol_power())?;
            }
            "symbol_power" => {
                sim.modulation = Modulation::new(sim.modulation.scheme(), parse(key, value)?)?;
            }
            "zeta" => {
                sim.zeta_list = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|v| parse(key, v))
                    .collect::<Result<_>>()?
            }
            "tnr_db" => sim.tnr_grid_db = parse_grid(value)?,
            "trials" => sim.trials_per_point = parse(key, value)?,
            "max_iters" => sim.max_iters = parse(key, value)?,
            "quantizer_bits" => sim.quantizer_bits = parse(key, value)?,
            "seed" => sim.master_seed = parse(key, value)?,
            "interrupt" => sim.interrupt_mode = parse_bool(key, value)?,
            "init" => sim.init = value.parse()?,
            "training" => {
                sim.training = match value {
                    "gaussian" => TrainingKind::Gaussian,
                    "pn" => TrainingKind::Pn,
                    other => return Err(Error::Parse(format!("unknown training kind {other:?}"))),
                }
            }
            "training_len" => sim.training_len = Some(parse(key, value)?),
            "block_symbols" => sim.block_symbols = parse(key, value)?,
            "bins" => sim.bins = parse(key, value)?,
            "threads" => sim.threads = parse(key, value)?,
            "sessions" => self.sessions = parse(key, value)?,
            "training_samples" => self.training_samples = parse(key, value)?,
            "lloyd_tol" => self.lloyd_tol = parse(key, value)?,
            "lloyd_max_rounds" => self.lloyd_max_rounds = parse(key, value)?,
            "codebook" => self.codebook = (!value.is_empty()).then(|| PathBuf::from(value)),
            "samples_in" => self.samples_in = (!value.is_empty()).then(|| PathBuf::from(value)),
            "out" => self.out = value.to_string(),
            other => return Err(Error::Parse(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. A `preset` line is applied first.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Parse(format!("line {}: unknown key {key:?}", lineno + 1)));
            }
            entries.push((key.to_string(), value.trim().to_string()));
        }
        entries.sort_by_key(|(k, _)| k != "preset");
        for (k, v) in entries {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    /// Checks the configuration and every path before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.sessions == 0 || self.training_samples == 0 || self.lloyd_max_rounds == 0 {
            return Err(Error::Parameter(
                "sessions, training_samples and lloyd_max_rounds must be positive".into(),
            ));
        }
        if self.lloyd_tol.is_nan() || self.lloyd_tol < 0.0 {
            return Err(Error::Parameter("lloyd_tol must be non-negative".into()));
        }
        for input in self.codebook.iter().chain(&self.samples_in) {
            if !input.is_file() {
                return Err(Error::Parameter(format!(
                    "input file {} does not exist",
                    input.display()
                )));
            }
        }
        if self.out != "-" {
            let out = Path::new(&self.out);
            if out.is_dir() {
                return Err(Error::Parameter(format!("output {} is a directory", out.display())));
            }
            let parent = out
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(Path::new("."));
            if !parent.is_dir() {
                return Err(Error::Parameter(format!(
                    "output directory {} does not exist",
                    parent.display()
                )));
            }
        }
        Ok(())
    }

    fn load_codebook(&self) -> Result<Option<StepCodebook>> {
        self.codebook
            .as_ref()
            .map(|p| {
                let text = fs::read_to_string(p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
                StepCodebook::from_text(&text)
            })
            .transpose()
    }
}

/// Writes `contents` to `out` through a temporary file and a rename, or to
/// standard output for `-`.
pub fn write_output(out: &str, contents: &str) -> std::io::Result<()> {
    if out == "-" {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(contents.as_bytes())?;
        return stdout.flush();
    }
    let path = Path::new(out);
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Codebook trained on the configured step-size population, or on
/// `samples_in` when given.
pub fn cmd_design_quantizer(cfg: &CliConfig) -> Result<StepCodebook> {
    cfg.validate()?;
    match &cfg.samples_in {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let samples: Vec<f64> = text
                .split_whitespace()
                .map(|v| parse("samples_in", v))
                .collect::<Result<_>>()?;
            quantizer::design_codebook(&samples, cfg.sim.quantizer_bits, cfg.lloyd_tol, cfg.lloyd_max_rounds)
        }
        None => quantizer::design_for_config(&cfg.sim, cfg.training_samples, cfg.lloyd_tol, cfg.lloyd_max_rounds),
    }
}

/// One seeded session as CSV: a start row, one row per step and receive
/// antenna, and an end row when the session converges. Frames are hex.
pub fn cmd_trace_session(cfg: &CliConfig) -> Result<String> {
    cfg.validate()?;
    let codebook = cfg.load_codebook()?;
    let trace = harness::seeded_session(&cfg.sim, codebook.as_ref())?;
    let bits = codebook.as_ref().map_or(cfg.sim.quantizer_bits, StepCodebook::bits);
    let frame = |m: &FeedbackMessage| encode_message(m, bits).map(|b| to_hex(&b));

    let mut out = String::from("kind,k,rx,mu_opt,mu_sent,err_sq,frame\n");
    let start = frame(&FeedbackMessage::StartEstimation)?;
    for (rx, row) in trace.rows.iter().enumerate() {
        let f = if rx == 0 { start.as_str() } else { "" };
        let _ = writeln!(out, "start,0,{rx},,,{},{f}", row.initial_err_sq);
    }
    let steps: Vec<&FeedbackMessage> = trace
        .messages
        .iter()
        .filter(|m| matches!(m, FeedbackMessage::Step { .. }))
        .collect();
    for i in 0..trace.iterations {
        let f = match steps.get(i) {
            Some(m) => frame(m)?,
            None => String::new(),
        };
        for (rx, row) in trace.rows.iter().enumerate() {
            let r = &row.records[i];
            let f = if rx == 0 { f.as_str() } else { "" };
            let _ = writeln!(out, "step,{},{rx},{},{},{},{f}", r.k, r.mu_opt, r.mu_sent, r.err_sq);
        }
    }
    if trace.converged {
        let end = frame(&FeedbackMessage::EndEstimation {
            iteration: trace.iterations as u16,
        })?;
        for (rx, row) in trace.rows.iter().enumerate() {
            let f = if rx == 0 { end.as_str() } else { "" };
            let _ = writeln!(out, "end,{},{rx},,,{},{f}", trace.iterations, row.final_err_sq());
        }
    }
    Ok(out)
}

pub fn cmd_ber_sweep(cfg: &CliConfig) -> Result<String> {
    cfg.validate()?;
    let codebook = cfg.load_codebook()?;
    Ok(harness::run_ber_sweep(&cfg.sim, codebook.as_ref())?.to_csv())
}

pub fn cmd_histogram(cfg: &CliConfig) -> Result<String> {
    cfg.validate()?;
    Ok(harness::run_histogram(&cfg.sim, cfg.sessions)?.to_csv())
}

pub fn cmd_convergence(cfg: &CliConfig) -> Result<String> {
    cfg.validate()?;
    let codebook = cfg.load_codebook()?;
    let records = harness::convergence_stats(&cfg.sim, codebook.as_ref(), cfg.sessions)?;
    Ok(harness::convergence_csv(&records))
}
