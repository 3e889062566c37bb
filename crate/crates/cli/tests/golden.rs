//! Reports compared byte for byte against files in `tests/golden`.
//! Set `LECAM_UPDATE_GOLDEN=1` to rewrite them.

use std::path::PathBuf;
use std::process::Command;

fn check(name: &str, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_lecam"))
        .args(args)
        .args(["--workers", "3"])
        .env_remove("LECAM_SEED")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("LECAM_UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &out.stdout).unwrap();
        return;
    }
    let expected = std::fs::read(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
    assert!(
        expected == out.stdout,
        "{name} differs:\n{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn price_exact_csv() {
    check("price_exact.csv", &["price", "--mode", "exact"]);
}

#[test]
fn price_exact_json() {
    check(
        "price_exact.json",
        &["price", "--mode", "exact", "--format", "json"],
    );
}

#[test]
fn price_monte_carlo_csv() {
    check("price_mc.csv", &["price", "--reps", "5000", "--seed", "7"]);
}

#[test]
fn crr_csv() {
    check("crr_compare.csv", &["crr-compare", "--steps", "2"]);
}

#[test]
fn crr_json() {
    check(
        "crr_compare.json",
        &[
            "crr-compare",
            "--steps",
            "1",
            "--up",
            "2",
            "--down",
            "0.5",
            "--format",
            "json",
        ],
    );
}

#[test]
fn tangents_csv() {
    check("tangents.csv", &["tangents"]);
}

#[test]
fn law_csv() {
    check(
        "law.csv",
        &[
            "law",
            "--n",
            "100",
            "--reps",
            "10",
            "--grid-points",
            "17",
            "--seed",
            "1",
        ],
    );
}
