//! Every command, run twice with the same seed and different worker counts,
//! must produce byte-identical reports.

use std::process::{Command, ExitCode};
use std::time::Instant;

const SEED: &str = "20241015";

const RUNS: [&[&str]; 12] = [
    &["price", "--reps", "20000"],
    &["greeks", "--reps", "20000"],
    &["variance-compare", "--budget", "20000"],
    &[
        "law",
        "--n",
        "100,400",
        "--reps",
        "200",
        "--grid-points",
        "17",
    ],
    &["lamn", "--n", "1000", "--reps", "300"],
    &[
        "empirical",
        "--n",
        "500",
        "--reps",
        "300",
        "--grid-points",
        "9",
    ],
    &["gaussian", "--reps", "300", "--grid-points", "129"],
    &["fbm", "--reps", "500", "--grid-points", "17"],
    &["prakasa-rao", "--n", "1000", "--reps", "200"],
    &["crr-compare", "--steps", "4"],
    &["hazard-check", "--tangent", "cosine"],
    &["tangents"],
];

fn report(args: &[&str], workers: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_lecam"))
        .args(args)
        .args(["--seed", SEED, "--workers", workers])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    Ok(out.stdout)
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut failures = Vec::new();
    for args in RUNS {
        let outcome = report(args, "1").and_then(|a| report(args, "5").map(|b| (a, b)));
        match outcome {
            Ok((a, b)) if a == b && !a.is_empty() => {}
            Ok(_) => failures.push(format!("{}: reports differ", args[0])),
            Err(e) => failures.push(format!("{}: {}", args[0], e.trim())),
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let name = "criterion 16 reproducibility";
    if failures.is_empty() {
        println!(
            "PASS {name}: {} commands byte-identical at 1 and 5 workers [{elapsed:.1}s]",
            RUNS.len()
        );
        println!("acceptance: 1 passed, 0 failed");
        ExitCode::SUCCESS
    } else {
        println!("FAIL {name}: {} [{elapsed:.1}s]", failures.join("; "));
        println!("acceptance: 0 passed, 1 failed");
        ExitCode::FAILURE
    }
}
