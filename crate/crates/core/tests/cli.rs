use std::path::Path;
use std::process::{Command, Output};

use csi_feedback::cli::{flag_for, KEYS};
use csi_feedback::feedback::{decode_message, from_hex, FeedbackMessage};
use csi_feedback::quantizer::StepCodebook;

const SUBCOMMANDS: [&str; 5] = [
    "design-quantizer",
    "trace-session",
    "ber-sweep",
    "histogram",
    "convergence",
];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csi-feedback"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_lists_every_key() {
    for sub in SUBCOMMANDS {
        let help = stdout_of(&[sub, "--help"]);
        for key in KEYS {
            assert!(help.contains(&flag_for(key)), "{sub} --help lacks {}", flag_for(key));
        }
        assert!(help.contains("--config"));
    }
}

#[test]
fn unknown_config_key_is_one_line_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "n_t = 2\nantennas = 4\n").unwrap();
    let out = run(&["histogram", "--config", path_str(&cfg)]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error:") && err.contains("antennas"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn invalid_values_fail() {
    for args in [
        ["histogram", "--n-t", "0"],
        ["histogram", "--zeta", "-1"],
        ["ber-sweep", "--modulation", "8psk"],
        ["trace-session", "--codebook", "/nonexistent/cb.txt"],
    ] {
        let out = run(&args);
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{args:?}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# sweep\nzeta = 0.3\nsessions = 50\n").unwrap();
    let csv = stdout_of(&["convergence", "--config", path_str(&cfg), "--zeta", "0.5"]);
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("0.5,2,false,50,"), "{}", rows[0]);
}

#[test]
fn one_bit_codebook_on_two_points() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("s.txt");
    std::fs::write(&samples, "-1\n1\n-1 1\n").unwrap();
    let out = dir.path().join("cb.txt");
    stdout_of(&[
        "design-quantizer",
        "--quantizer-bits",
        "1",
        "--samples-in",
        path_str(&samples),
        "--out",
        path_str(&out),
    ]);
    let cb = StepCodebook::from_text(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(cb.bits(), 1);
    assert_eq!(cb.levels(), &[-1.0, 1.0]);
    assert_eq!(cb.thresholds(), &[0.0]);
}

#[test]
fn codebooks_repeat_for_a_seed() {
    let args = ["design-quantizer", "--seed", "9", "--training-samples", "5000"];
    let a = stdout_of(&args);
    assert_eq!(a, stdout_of(&args));
    let c = stdout_of(&["design-quantizer", "--seed", "10", "--training-samples", "5000"]);
    assert_ne!(a, c);
}

#[test]
fn quantized_trace_frames_carry_the_sent_steps() {
    let dir = tempfile::tempdir().unwrap();
    let cb_path = dir.path().join("cb.txt");
    stdout_of(&[
        "design-quantizer",
        "--training-samples",
        "20000",
        "--n-r",
        "2",
        "--out",
        path_str(&cb_path),
    ]);
    let cb = StepCodebook::from_text(&std::fs::read_to_string(&cb_path).unwrap()).unwrap();
    let csv = stdout_of(&["trace-session", "--n-r", "2", "--codebook", path_str(&cb_path)]);

    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0][0], "start");
    let steps: Vec<&Vec<&str>> = rows.iter().filter(|r| r[0] == "step").collect();
    assert!(!steps.is_empty());
    for pair in steps.chunks(2) {
        let frame = from_hex(pair[0][6]).unwrap();
        let FeedbackMessage::Step { iteration, indices } = decode_message(&frame, cb.bits()).unwrap() else {
            panic!("not a step frame");
        };
        assert_eq!(iteration.to_string(), pair[0][1]);
        assert_eq!(indices.len(), 2);
        for (row, &index) in pair.iter().zip(&indices) {
            let sent: f64 = row[4].parse().unwrap();
            assert_eq!(cb.decode(index as usize).unwrap(), sent);
        }
    }
    let last = rows.last().unwrap();
    if last[0] == "end" {
        let frame = rows.iter().find(|r| r[0] == "end" && r[2] == "0").unwrap()[6];
        assert_eq!(
            decode_message(&from_hex(frame).unwrap(), cb.bits()).unwrap(),
            FeedbackMessage::EndEstimation {
                iteration: last[1].parse().unwrap()
            }
        );
    }
}

#[test]
fn ideal_trace_error_never_grows() {
    for seed in ["1", "2", "3"] {
        let csv = stdout_of(&["trace-session", "--seed", seed, "--zeta", "0.01"]);
        let errs: Vec<f64> = csv
            .lines()
            .skip(1)
            .filter(|l| !l.starts_with("end"))
            .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
            .collect();
        assert!(errs.len() > 2);
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12), "seed {seed}");
        assert!(csv.lines().last().unwrap().starts_with("end,"));
    }
}

#[test]
fn single_point_sweep_has_one_row_per_scheme() {
    let csv = stdout_of(&["ber-sweep", "--tnr-db", "6", "--trials", "200", "--zeta", "0.1,0.5"]);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(
        rows[0],
        "tnr_db,scheme,zeta,n_t,modulation,bits_sent,bit_errors,ber,ci_lo,ci_hi"
    );
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("6,OBS,,2,bpsk,"));
    assert!(rows[2].starts_with("6,SOBS,0.1,"));
    assert!(rows[3].starts_with("6,SOBS,0.5,"));
}

#[test]
fn histogram_counts_every_step() {
    let csv = stdout_of(&["histogram", "--sessions", "200", "--bins", "11"]);
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 11);
    let total: u64 = rows
        .iter()
        .map(|r| r.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert!(total > 200);
}

#[test]
fn output_file_is_written_whole() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    let printed = stdout_of(&["histogram", "--sessions", "100", "--out", path_str(&out)]);
    assert!(printed.is_empty());
    let written = std::fs::read_to_string(&out).unwrap();
    assert_eq!(written, stdout_of(&["histogram", "--sessions", "100"]));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}
