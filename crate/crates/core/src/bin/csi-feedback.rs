use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use csi_feedback::cli::{self, CliConfig};

#[derive(Parser)]
#[command(
    name = "csi-feedback",
    version,
    about = "Adaptive partial-feedback channel estimation simulator"
)]
struct Opts {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a Lloyd-Max step-size codebook and write it as text.
    DesignQuantizer(Keys),
    /// Trace one seeded estimation session as CSV.
    TraceSession(Keys),
    /// BER versus TNR for exact and estimated beamforming, as CSV.
    BerSweep(Keys),
    /// Histogram of exact step sizes, as CSV.
    Histogram(Keys),
    /// Session length and feedback cost per zeta, as CSV.
    Convergence(Keys),
}

/// One flag per configuration key.
#[derive(Args, Debug)]
struct Keys {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named setup: bpsk-nt2, bpsk-nt3, qpsk-nt2, qpsk-nt3.
    #[arg(long)]
    preset: Option<String>,
    /// Transmit antennas.
    #[arg(long)]
    n_t: Option<String>,
    /// Receive antennas (one step size fed back per antenna).
    #[arg(long)]
    n_r: Option<String>,
    /// bpsk or qpsk (Gray labeled).
    #[arg(long)]
    modulation: Option<String>,
    /// Symbol energy P.
    #[arg(long)]
    symbol_power: Option<String>,
    /// Comma-separated estimate-error thresholds.
    #[arg(long)]
    zeta: Option<String>,
    /// TNR grid in dB: lo:step:hi (inclusive) or a comma-separated list.
    #[arg(long)]
    tnr_db: Option<String>,
    /// Channel realizations per TNR point.
    #[arg(long)]
    trials: Option<String>,
    /// Iteration cap per session.
    #[arg(long)]
    max_iters: Option<String>,
    /// Bits per fed-back step size.
    #[arg(long)]
    quantizer_bits: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<String>,
    /// Pause data during estimation (true/false).
    #[arg(long)]
    interrupt: Option<String>,
    /// Initial estimate: zero or previous.
    #[arg(long)]
    init: Option<String>,
    /// Training vectors: gaussian or pn.
    #[arg(long)]
    training: Option<String>,
    /// Training vectors per session (default 64·n_t).
    #[arg(long)]
    training_len: Option<String>,
    /// Data symbols per realization and TNR point.
    #[arg(long)]
    block_symbols: Option<String>,
    /// Histogram bins.
    #[arg(long)]
    bins: Option<String>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    threads: Option<String>,
    /// Sessions for histograms and convergence statistics.
    #[arg(long)]
    sessions: Option<String>,
    /// Minimum step-size samples for codebook training.
    #[arg(long)]
    training_samples: Option<String>,
    /// Relative distortion change that stops Lloyd iterations.
    #[arg(long)]
    lloyd_tol: Option<String>,
    /// Lloyd iteration cap.
    #[arg(long)]
    lloyd_max_rounds: Option<String>,
    /// Codebook file; omit for ideal feedback.
    #[arg(long)]
    codebook: Option<String>,
    /// Train on these whitespace-separated samples instead of simulating.
    #[arg(long)]
    samples_in: Option<String>,
    /// Output path, `-` for standard output.
    #[arg(long)]
    out: Option<String>,
}

impl Keys {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("preset", &self.preset),
            ("n_t", &self.n_t),
            ("n_r", &self.n_r),
            ("modulation", &self.modulation),
            ("symbol_power", &self.symbol_power),
            ("zeta", &self.zeta),
            ("tnr_db", &self.tnr_db),
            ("trials", &self.trials),
            ("max_iters", &self.max_iters),
            ("quantizer_bits", &self.quantizer_bits),
            ("seed", &self.seed),
            ("interrupt", &self.interrupt),
            ("init", &self.init),
            ("training", &self.training),
            ("training_len", &self.training_len),
            ("block_symbols", &self.block_symbols),
            ("bins", &self.bins),
            ("threads", &self.threads),
            ("sessions", &self.sessions),
            ("training_samples", &self.training_samples),
            ("lloyd_tol", &self.lloyd_tol),
            ("lloyd_max_rounds", &self.lloyd_max_rounds),
            ("codebook", &self.codebook),
            ("samples_in", &self.samples_in),
            ("out", &self.out),
        ]
    }

    fn resolve(&self) -> Result<CliConfig> {
        let mut cfg = CliConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text)
                .with_context(|| format!("in {}", path.display()))?;
        }
        let pairs = self.pairs();
        debug_assert_eq!(pairs.len(), cli::KEYS.len());
        // a preset flag resets the simulation keys before the other flags apply
        for (key, value) in pairs.iter().filter(|(k, _)| *k == "preset") {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for (key, value) in pairs.iter().filter(|(k, _)| *k != "preset") {
            if let Some(v) = value {
                cfg.set(key, v)
                    .with_context(|| format!("flag {}", cli::flag_for(key)))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(opts: Opts) -> Result<()> {
    match opts.command {
        Command::DesignQuantizer(keys) => {
            let cfg = keys.resolve()?;
            eprintln!("designing {}-bit codebook", cfg.sim.quantizer_bits);
            let cb = cli::cmd_design_quantizer(&cfg)?;
            cli::write_output(&cfg.out, &cb.to_text()).context("writing codebook")?;
            eprintln!(
                "distortion {} over {} samples",
                cb.meta().distortion,
                cb.meta().sample_count
            );
        }
        Command::TraceSession(keys) => {
            let cfg = keys.resolve()?;
            let csv = cli::cmd_trace_session(&cfg)?;
            cli::write_output(&cfg.out, &csv).context("writing trace")?;
        }
        Command::BerSweep(keys) => {
            let cfg = keys.resolve()?;
            eprintln!(
                "sweeping {} TNR points, {} trials each",
                cfg.sim.tnr_grid_db.len(),
                cfg.sim.trials_per_point
            );
            let csv = cli::cmd_ber_sweep(&cfg)?;
            cli::write_output(&cfg.out, &csv).context("writing BER table")?;
            eprintln!("done");
        }
        Command::Histogram(keys) => {
            let cfg = keys.resolve()?;
            let csv = cli::cmd_histogram(&cfg)?;
            cli::write_output(&cfg.out, &csv).context("writing histogram")?;
        }
        Command::Convergence(keys) => {
            let cfg = keys.resolve()?;
            let csv = cli::cmd_convergence(&cfg)?;
            cli::write_output(&cfg.out, &csv).context("writing convergence table")?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Opts::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
