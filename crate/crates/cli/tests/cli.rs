use std::process::{Command, Output};

use serde_json::Value;

fn lecam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lecam"))
        .args(args)
        .env_remove("LECAM_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// `(value, stderr)` of the first row named `statistic`.
fn row(csv: &str, statistic: &str) -> (String, String) {
    let line = csv
        .lines()
        .find(|l| l.split(',').nth(2) == Some(statistic))
        .unwrap_or_else(|| panic!("no row {statistic}"));
    let f: Vec<&str> = line.split(',').collect();
    (f[4].to_string(), f[5].to_string())
}

fn error_record(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("json error record")
}

#[test]
fn price_is_near_black_scholes() {
    let csv = stdout(&lecam(&[
        "price", "--sigma", "0.2", "--s0", "1", "--strike", "1", "--reps", "1000000", "--seed", "7",
    ]));
    let (v, s) = row(&csv, "price");
    let (v, s): (f64, f64) = (v.parse().unwrap(), s.parse().unwrap());
    // d1 = 0.1, d2 = -0.1: Phi(0.1) - Phi(-0.1)
    let bs = 0.079_655_674_554_058;
    assert!((v - bs).abs() < 3.0 * s, "{v} +- {s}");
}

#[test]
fn law_is_repeatable() {
    let args = ["law", "--n", "100", "--reps", "10", "--seed", "1"];
    assert_eq!(stdout(&lecam(&args)), stdout(&lecam(&args)));
}

#[test]
fn invalid_sigma_exits_two() {
    let out = lecam(&["price", "--sigma", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    let rec = error_record(&out);
    assert_eq!(rec["constraint"], "sigma");
    assert_eq!(rec["kind"], "invalid_config");
}

#[test]
fn arbitrage_exits_two() {
    let out = lecam(&[
        "crr-compare",
        "--up",
        "1.1",
        "--down",
        "0.9",
        "--growth",
        "1.2",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_four() {
    let out = lecam(&["tangents", "--output", "/nonexistent-dir/report.csv"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_record(&out)["kind"], "io_failure");
}

#[test]
fn help_exits_zero() {
    assert_eq!(lecam(&["--help"]).status.code(), Some(0));
    assert_eq!(lecam(&["price", "--help"]).status.code(), Some(0));
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "# call\nsigma = 0.3\nstrike = 1.2\nmode = exact\n").unwrap();
    let p = path.to_str().unwrap();
    let csv = stdout(&lecam(&["price", "--config", p, "--strike", "0.9"]));
    assert_eq!(row(&csv, "config.sigma").0, "0.3");
    assert_eq!(row(&csv, "config.strike").0, "0.9");
    assert_eq!(row(&csv, "config.s0").0, "1");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "volatility = 0.3\n").unwrap();
    let out = lecam(&["price", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["constraint"], "volatility");
}

#[test]
fn seed_environment_is_lowest_precedence() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_lecam"));
        cmd.args(["crr-compare"])
            .args(extra)
            .env_remove("LECAM_SEED");
        if let Some(s) = env {
            cmd.env("LECAM_SEED", s);
        }
        row(&stdout(&cmd.output().unwrap()), "config.seed").0
    };
    assert_eq!(run(None, &[]), "1");
    assert_eq!(run(Some("42"), &[]), "42");
    assert_eq!(run(Some("42"), &["--seed", "5"]), "5");
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let args = ["price", "--mode", "exact", "--format", "json"];
    let direct = stdout(&lecam(&args));
    let mut with_file = args.to_vec();
    with_file.extend(["--output", path.to_str().unwrap()]);
    assert!(stdout(&lecam(&with_file)).is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), direct);
}

#[test]
fn every_numeric_row_is_qualified() {
    let csv = stdout(&lecam(&["greeks", "--reps", "2000"]));
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 8, "{line}");
        assert!(
            f[5] == "exact" || f[5] == "none" || f[5].parse::<f64>().is_ok(),
            "{line}"
        );
        assert!(
            f[6].parse::<usize>().is_ok() && f[7].parse::<u64>().is_ok(),
            "{line}"
        );
    }
}

#[test]
fn tangent_catalog() {
    let csv = stdout(&lecam(&["tangents"]));
    let m: f64 = row(&csv, "linear.second_moment").0.parse().unwrap();
    assert!((m - 1.0 / 3.0).abs() < 1e-12);
}
