//! Report rows and their CSV/JSON serialization.
//!
//! Columns: `command,parameter_hash,statistic,t,value,stderr,reps,seed`.
//! `stderr` is a number for Monte Carlo means, `exact` for deterministic
//! values and `none` for sample statistics without a standard error
//! (medians, variances, KS distances). Rows named `config.<key>` carry the
//! resolved configuration.

use std::io::Write;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use lecam_core::pricing::Quantity;
use lecam_core::MonteCarloEstimate;

use crate::config::RunConfig;
use crate::error::CliError;

pub const COLUMNS: [&str; 8] = [
    "command",
    "parameter_hash",
    "statistic",
    "t",
    "value",
    "stderr",
    "reps",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stderr {
    Value(f64),
    Exact,
    NotAvailable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub statistic: String,
    pub t: Option<f64>,
    pub value: Cell,
    pub stderr: Stderr,
    pub reps: usize,
}

impl Row {
    pub fn exact(statistic: impl Into<String>, value: f64) -> Self {
        Self {
            statistic: statistic.into(),
            t: None,
            value: Cell::Number(value),
            stderr: Stderr::Exact,
            reps: 0,
        }
    }

    pub fn estimate(statistic: impl Into<String>, e: &MonteCarloEstimate) -> Self {
        Self {
            statistic: statistic.into(),
            t: None,
            value: Cell::Number(e.mean),
            stderr: Stderr::Value(e.stderr),
            reps: e.reps,
        }
    }

    pub fn quantity(statistic: impl Into<String>, q: &Quantity) -> Self {
        match q {
            Quantity::Exact(v) => Self::exact(statistic, *v),
            Quantity::Estimate(e) => Self::estimate(statistic, e),
        }
    }

    /// Sample statistic without a standard error.
    pub fn sample(statistic: impl Into<String>, value: f64, reps: usize) -> Self {
        Self {
            statistic: statistic.into(),
            t: None,
            value: Cell::Number(value),
            stderr: Stderr::NotAvailable,
            reps,
        }
    }

    pub fn at(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub parameter_hash: String,
    pub seed: u64,
    pub rows: Vec<Row>,
}

/// First 16 hex digits of SHA-256 over `command` and the sorted
/// `key=value` pairs, seed included.
pub fn parameter_hash(config: &RunConfig) -> String {
    let mut h = Sha256::new();
    h.update(config.command.name().as_bytes());
    for (k, v) in config.canonical_pairs() {
        h.update(b"\n");
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
    }
    hex::encode(h.finalize())[..16].to_string()
}

impl Report {
    /// Config rows first, then the results.
    pub fn new(config: &RunConfig, results: Vec<Row>) -> Self {
        let mut rows: Vec<Row> = config
            .canonical_pairs()
            .into_iter()
            .map(|(k, v)| Row {
                statistic: format!("config.{k}"),
                t: None,
                value: Cell::Text(v),
                stderr: Stderr::Exact,
                reps: 0,
            })
            .collect();
        rows.extend(results);
        Self {
            command: config.command.name().to_string(),
            parameter_hash: parameter_hash(config),
            seed: config.seed,
            rows,
        }
    }

    fn fields(&self, row: &Row) -> [String; 8] {
        [
            self.command.clone(),
            self.parameter_hash.clone(),
            row.statistic.clone(),
            row.t.map(|t| t.to_string()).unwrap_or_default(),
            match &row.value {
                Cell::Number(v) => v.to_string(),
                Cell::Text(s) => s.clone(),
            },
            stderr_text(row.stderr),
            row.reps.to_string(),
            self.seed.to_string(),
        ]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(COLUMNS)?;
        for row in &self.rows {
            w.write_record(self.fields(row))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "command": self.command,
                    "parameter_hash": self.parameter_hash,
                    "statistic": r.statistic,
                    "t": r.t,
                    "value": match &r.value {
                        Cell::Number(v) => json!(v),
                        Cell::Text(s) => json!(s),
                    },
                    "stderr": match r.stderr {
                        Stderr::Value(s) => json!(s),
                        other => json!(stderr_text(other)),
                    },
                    "reps": r.reps,
                    "seed": self.seed,
                })
            })
            .collect();
        json!({ "columns": COLUMNS, "rows": rows })
    }

    pub fn render(&self, format: crate::config::Format) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        match format {
            crate::config::Format::Csv => self.write_csv(&mut buf).map_err(|e| CliError::Io {
                path: "<report>".into(),
                message: e.to_string(),
            })?,
            crate::config::Format::Json => {
                serde_json::to_writer_pretty(&mut buf, &self.to_json()).map_err(|e| {
                    CliError::Io {
                        path: "<report>".into(),
                        message: e.to_string(),
                    }
                })?;
                buf.push(b'\n');
            }
        }
        Ok(buf)
    }
}

fn stderr_text(s: Stderr) -> String {
    match s {
        Stderr::Value(v) => v.to_string(),
        Stderr::Exact => "exact".into(),
        Stderr::NotAvailable => "none".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{resolve, CommandKind, Format, RawInputs};

    fn config(seed: &str) -> RunConfig {
        let mut raw = RawInputs {
            default_workers: 1,
            ..Default::default()
        };
        raw.flags.insert("seed".into(), seed.into());
        resolve(CommandKind::CrrCompare, &raw).unwrap()
    }

    #[test]
    fn hash_tracks_seed_but_not_workers() {
        let a = config("3");
        let mut b = a.clone();
        b.workers = 8;
        assert_eq!(parameter_hash(&a), parameter_hash(&b));
        assert_ne!(parameter_hash(&a), parameter_hash(&config("4")));
        assert_eq!(parameter_hash(&a).len(), 16);
    }

    #[test]
    fn csv_header_and_stderr_markers() {
        let rows = vec![
            Row::exact("a", 0.5),
            Row::sample("b", 0.25, 10).at(1.0),
            Row::estimate(
                "c",
                &MonteCarloEstimate {
                    mean: 1.0,
                    stderr: 0.125,
                    reps: 4,
                    seed: 3,
                },
            ),
        ];
        let report = Report::new(&config("3"), rows);
        let text = String::from_utf8(report.render(Format::Csv).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), COLUMNS.join(","));
        let tail: Vec<&str> = text.lines().rev().take(3).collect();
        assert!(tail[2].ends_with(",a,,0.5,exact,0,3"), "{}", tail[2]);
        assert!(tail[1].ends_with(",b,1,0.25,none,10,3"), "{}", tail[1]);
        assert!(tail[0].ends_with(",c,,1,0.125,4,3"), "{}", tail[0]);
    }

    #[test]
    fn config_rows_come_first() {
        let report = Report::new(&config("3"), vec![Row::exact("x", 1.0)]);
        let names: Vec<&str> = report.rows.iter().map(|r| r.statistic.as_str()).collect();
        assert_eq!(names.last(), Some(&"x"));
        assert!(names[..names.len() - 1]
            .iter()
            .all(|n| n.starts_with("config.")));
        assert_eq!(names[names.len() - 2], "config.seed");
    }

    #[test]
    fn json_has_the_same_columns() {
        let report = Report::new(&config("3"), vec![Row::sample("s", 2.0, 5)]);
        let v = report.to_json();
        assert_eq!(v["columns"].as_array().unwrap().len(), COLUMNS.len());
        let last = v["rows"].as_array().unwrap().last().unwrap().clone();
        for c in COLUMNS {
            assert!(last.get(c).is_some(), "missing {c}");
        }
        assert_eq!(last["stderr"], "none");
        assert!(last["t"].is_null());
    }
}
