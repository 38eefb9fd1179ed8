//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::Rng;

use csi_feedback::beamformer::Modulation;
use csi_feedback::estimator::{admissible_interval, optimal_step};
use csi_feedback::feedback::{decode_message, encode_message, from_hex, FeedbackMessage};
use csi_feedback::harness::{
    convergence_stats, mrc_ber_oracle, run_ber_sweep, BeamScheme, BerPoint, Histogram, SimConfig,
};
use csi_feedback::quantizer::{
    collect_step_samples, design_codebook_traced, design_for_config, sqnr_db, StepCodebook, DEFAULT_MAX_ROUNDS,
    DEFAULT_TOL,
};
use csi_feedback::rng::RngStream;
use csi_feedback::vector::draw_complex_gaussian;
use csi_feedback::ChannelVector;

/// Distortion of the unit-Gaussian 8-level Lloyd-Max quantizer, from a
/// fine-grid fixed-point solve.
const GAUSS_3BIT_DISTORTION: f64 = 0.034_547_760_794_359_61;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_instance(rng: &mut RngStream) -> (ChannelVector, ChannelVector, ChannelVector) {
    let n = rng.gen_range(1..=8);
    let h = draw_complex_gaussian(rng, n, 1.0).unwrap();
    let h_prev = draw_complex_gaussian(rng, n, 1.0).unwrap();
    let x = draw_complex_gaussian(rng, n, 1.0).unwrap();
    (h, h_prev, x)
}

fn err_after(h: &ChannelVector, h_prev: &ChannelVector, x: &ChannelVector, mu: f64) -> f64 {
    let mut next = h_prev.clone();
    next.axpy(mu, x).unwrap();
    (h - &next).norm_sq()
}

fn error_identity() -> Outcome {
    let mut rng = RngStream::new(101, 0);
    let mut worst = 0.0f64;
    let n = 20_000;
    for _ in 0..n {
        let (h, h_prev, x) = random_instance(&mut rng);
        let e = &h - &h_prev;
        let re = x.inner(&e).unwrap().re;
        let closed = e.norm_sq() - re * re / x.norm_sq();
        let step = optimal_step(&h, &h_prev, &x).unwrap();
        let direct = err_after(&h, &h_prev, &x, step.mu_opt);
        worst = worst
            .max((direct - closed).abs())
            .max((step.predicted_error_sq - closed).abs());
    }
    check(worst <= 1e-12, format!("{n} instances, max |diff| {worst:.2e}"))
}

fn interval_suite() -> Outcome {
    let mut rng = RngStream::new(102, 0);
    let (mut inside, mut outside, mut negative, mut bad) = (0usize, 0usize, 0usize, 0usize);
    let mut worst_end = 0.0f64;
    for _ in 0..2_000 {
        let (h, h_prev, x) = random_instance(&mut rng);
        let mu_star = optimal_step(&h, &h_prev, &x).unwrap().mu_opt;
        if mu_star.abs() < 1e-6 {
            continue;
        }
        negative += usize::from(mu_star < 0.0);
        let (lo, hi) = admissible_interval(&h, &h_prev, &x).unwrap();
        let before = (&h - &h_prev).norm_sq();
        for end in [lo, hi] {
            worst_end = worst_end.max((err_after(&h, &h_prev, &x, end) - before).abs());
        }
        let width = hi - lo;
        for i in 0..50 {
            let (mu, is_inside) = if i % 2 == 0 {
                (lo + width * rng.gen_range(0.01..0.99), true)
            } else {
                let d = width * rng.gen_range(0.01..2.0);
                (if rng.gen_bool(0.5) { lo - d } else { hi + d }, false)
            };
            let after = err_after(&h, &h_prev, &x, mu);
            let ok = if is_inside { after < before } else { after > before };
            bad += usize::from(!ok);
            if is_inside {
                inside += 1;
            } else {
                outside += 1;
            }
        }
    }
    check(
        bad == 0 && negative > 0 && worst_end <= 1e-10,
        format!(
            "{inside} inside, {outside} outside, {negative} instances with negative optimum, \
             {bad} violations, endpoint max |diff| {worst_end:.2e}"
        ),
    )
}

fn convergence() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for n_t in [2, 3] {
        let cfg = SimConfig {
            n_t,
            zeta_list: vec![0.1],
            ..SimConfig::default()
        };
        let codebook = design_for_config(&cfg, 100_000, DEFAULT_TOL, DEFAULT_MAX_ROUNDS).unwrap();
        let ideal = &convergence_stats(&cfg, None, 1000).unwrap()[0];
        let quant = &convergence_stats(&cfg, Some(&codebook), 1000).unwrap()[0];
        ok &= ideal.frac_converged == 1.0 && quant.frac_converged >= 0.95;
        lines.push(format!(
            "n_t={n_t}: ideal {:.1}% (median {}), 3-bit {:.1}% (median {})",
            100.0 * ideal.frac_converged,
            ideal.median_iters,
            100.0 * quant.frac_converged,
            quant.median_iters
        ));
    }
    check(ok, lines.join("; "))
}

fn obs_oracle() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for n_t in [2, 3] {
        let cfg = SimConfig {
            n_t,
            zeta_list: vec![],
            trials_per_point: 10_000_000,
            block_symbols: 1,
            ..SimConfig::default()
        };
        let curve = run_ber_sweep(&cfg, None).unwrap();
        let mut worst = 0.0f64;
        let mut checked = 0;
        for p in curve.series(BeamScheme::Obs) {
            let oracle = mrc_ber_oracle(10f64.powf(p.tnr_db / 10.0), n_t, &Modulation::bpsk());
            if oracle < 1e-5 {
                continue;
            }
            checked += 1;
            let z = (p.ber - oracle).abs() / p.wilson_se();
            worst = worst.max(z);
            ok &= z <= 3.0 && p.bits_sent >= 10_000_000;
        }
        lines.push(format!("n_t={n_t}: {checked} points, worst {worst:.2} SE"));
    }
    check(ok, lines.join("; "))
}

fn overlap(a: &BerPoint, b: &BerPoint) -> bool {
    a.ci95.0 <= b.ci95.1 && b.ci95.0 <= a.ci95.1
}

fn sobs_matches_obs() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for n_t in [2, 3] {
        let cfg = SimConfig {
            n_t,
            ..SimConfig::default()
        };
        let codebook = design_for_config(&cfg, 100_000, DEFAULT_TOL, DEFAULT_MAX_ROUNDS).unwrap();
        let curve = run_ber_sweep(&cfg, Some(&codebook)).unwrap();
        let obs = curve.series(BeamScheme::Obs);
        let series: Vec<_> = cfg
            .zeta_list
            .iter()
            .map(|&zeta| curve.series(BeamScheme::Sobs { zeta }))
            .collect();
        let mut apart = Vec::new();
        let mut misordered = 0;
        for (i, o) in obs.iter().enumerate() {
            if !overlap(o, series[0][i]) {
                apart.push(o.tnr_db);
            }
            for pair in series.windows(2) {
                let (a, b) = (pair[0][i], pair[1][i]);
                if a.ber > b.ber && !overlap(a, b) {
                    misordered += 1;
                }
            }
        }
        ok &= apart.is_empty() && misordered == 0;
        lines.push(format!(
            "n_t={n_t}: zeta=0.1 CI disjoint from OBS at {apart:?} dB, {misordered} zeta-order violations"
        ));
    }
    check(ok, lines.join("; "))
}

fn step_distribution() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for n_t in [2, 3] {
        let cfg = SimConfig {
            n_t,
            zeta_list: vec![0.1],
            ..SimConfig::default()
        };
        let mut samples = collect_step_samples(&cfg, 10_000).unwrap();
        samples.truncate(100_000);
        let hist = Histogram::from_samples(&samples, cfg.bins).unwrap();
        let m = hist.mode_bin();
        let mode_has_zero = hist.edges[m] <= 0.0 && 0.0 < hist.edges[m + 1];
        ok &= samples.len() == 100_000 && hist.mean.abs() < 0.02 && hist.skewness.abs() < 0.1 && mode_has_zero;
        lines.push(format!(
            "n_t={n_t}: mean {:+.4}, skew {:+.4}, mode bin [{:.4}, {:.4})",
            hist.mean,
            hist.skewness,
            hist.edges[m],
            hist.edges[m + 1]
        ));
    }
    check(ok, lines.join("; "))
}

fn quantizer() -> Outcome {
    let mut rng = RngStream::new(107, 0);
    let samples: Vec<f64> = (0..1_000_000).map(|_| rng.gaussian()).collect();
    let design = design_codebook_traced(&samples, 3, DEFAULT_TOL, DEFAULT_MAX_ROUNDS).unwrap();
    let monotone = design.history.windows(2).all(|w| w[1] <= w[0]);

    let mut held_out = RngStream::new(107, 1);
    let test: Vec<f64> = (0..1_000_000).map(|_| held_out.gaussian()).collect();
    let oracle_db = 10.0 * (1.0 / GAUSS_3BIT_DISTORTION).log10();
    let got_db = sqnr_db(&design.codebook, &test);

    let text = design.codebook.to_text();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("codebook.txt");
    std::fs::write(&path, &text).unwrap();
    let reread = StepCodebook::from_text(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let round_trip = reread.to_text() == text && reread == design.codebook;

    check(
        monotone && (got_db - oracle_db).abs() <= 0.2 && round_trip,
        format!(
            "{} rounds monotone={monotone}, SQNR {got_db:.4} dB vs oracle {oracle_db:.4} dB, file round trip={round_trip}",
            design.history.len()
        ),
    )
}

fn golden_frames() -> Vec<(FeedbackMessage, u8, Vec<u8>)> {
    let text = include_str!("data/golden_frames.txt");
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            let iteration: u16 = f[1].parse().unwrap();
            let msg = match f[0] {
                "start" => FeedbackMessage::StartEstimation,
                "end" => FeedbackMessage::EndEstimation { iteration },
                _ => FeedbackMessage::Step {
                    iteration,
                    indices: f[3].split(',').map(|v| v.parse().unwrap()).collect(),
                },
            };
            (msg, f[2].parse().unwrap(), from_hex(f[4]).unwrap())
        })
        .collect()
}

fn protocol() -> Outcome {
    let mut rng = RngStream::new(108, 0);
    let n = 10_000;
    let mut failures = 0;
    for _ in 0..n {
        let bits: u8 = rng.gen_range(1..=8);
        let msg = match rng.gen_range(0..3) {
            0 => FeedbackMessage::StartEstimation,
            1 => FeedbackMessage::EndEstimation { iteration: rng.gen() },
            _ => {
                let n_r = rng.gen_range(1..=8);
                FeedbackMessage::Step {
                    iteration: rng.gen(),
                    indices: (0..n_r).map(|_| rng.gen_range(0..1u16 << bits)).collect(),
                }
            }
        };
        let bytes = encode_message(&msg, bits).unwrap();
        let back = decode_message(&bytes, bits).unwrap();
        if back != msg || encode_message(&back, bits).unwrap() != bytes {
            failures += 1;
        }
    }
    let golden = golden_frames();
    let golden_bad = golden
        .iter()
        .filter(|(msg, bits, hex)| {
            encode_message(msg, *bits).unwrap() != *hex || decode_message(hex, *bits).unwrap() != *msg
        })
        .count();
    check(
        failures == 0 && golden_bad == 0 && golden.len() == 4,
        format!(
            "{n} round trips, {failures} failures; {} golden frames, {golden_bad} mismatches",
            golden.len()
        ),
    )
}

fn run_cli(dir: &Path, args: &[&str], threads: &str, name: &str) -> Vec<u8> {
    let out = dir.join(name);
    let status = Command::new(env!("CARGO_BIN_EXE_csi-feedback"))
        .args(args)
        .args(["--threads", threads, "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out).unwrap()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cb = dir.path().join("cb.txt");
    let cb_arg = cb.to_str().unwrap().to_owned();
    let design = ["design-quantizer", "--seed", "5", "--training-samples", "20000"];
    let reference = run_cli(dir.path(), &design, "1", "cb.txt");
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("design-quantizer", design.to_vec()),
        (
            "trace-session",
            vec!["trace-session", "--seed", "5", "--codebook", &cb_arg],
        ),
        (
            "ber-sweep",
            vec![
                "ber-sweep",
                "--seed",
                "5",
                "--trials",
                "300",
                "--tnr-db",
                "0:5:10",
                "--codebook",
                &cb_arg,
            ],
        ),
        ("histogram", vec!["histogram", "--seed", "5", "--sessions", "500"]),
        (
            "convergence",
            vec!["convergence", "--seed", "5", "--sessions", "300", "--codebook", &cb_arg],
        ),
    ];
    let mut differing = Vec::new();
    for (name, args) in &runs {
        let outputs: Vec<Vec<u8>> = ["1", "4", "0", "1"]
            .iter()
            .enumerate()
            .map(|(i, t)| run_cli(dir.path(), args, t, &format!("{name}.{i}")))
            .collect();
        if outputs.iter().any(|o| *o != outputs[0] || o.is_empty()) {
            differing.push(*name);
        }
    }
    if std::fs::read(&cb).unwrap() != reference {
        differing.push("codebook file");
    }
    check(
        differing.is_empty(),
        format!("{} commands at --threads 1/4/0/1, differing: {differing:?}", runs.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("error identity", error_identity),
        ("admissible interval", interval_suite),
        ("convergence", convergence),
        ("OBS vs closed form", obs_oracle),
        ("SOBS vs OBS", sobs_matches_obs),
        ("step-size distribution", step_distribution),
        ("quantizer", quantizer),
        ("protocol", protocol),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {} {name}: PASS ({d}) [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({d}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
