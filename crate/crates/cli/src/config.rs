//! Per-command parameter tables and resolution of flags, config files,
//! environment and defaults into a [`RunConfig`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 1;
pub const SEED_ENV: &str = "LECAM_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Count,
    Choice(&'static [&'static str]),
    FloatList,
    CountList,
}

#[derive(Debug, Clone, Copy)]
pub struct ParamDef {
    pub name: &'static str,
    pub default: &'static str,
    pub kind: Kind,
    pub help: &'static str,
}

const fn p(name: &'static str, default: &'static str, kind: Kind, help: &'static str) -> ParamDef {
    ParamDef {
        name,
        default,
        kind,
        help,
    }
}

const TANGENTS: &[&str] = &["linear", "centered", "cosine", "zero"];
const MODES: &[&str] = &["alternative", "change-of-measure", "exact"];

const CALL: [ParamDef; 5] = [
    p(
        "sigma",
        "0.2",
        Kind::Float,
        "effective volatility of the likelihood ratio",
    ),
    p("s0", "1", Kind::Float, "spot price"),
    p("strike", "1", Kind::Float, "strike"),
    p("rate", "0", Kind::Float, "constant short rate"),
    p("horizon", "1", Kind::Float, "maturity T"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CommandKind {
    Price,
    Greeks,
    VarianceCompare,
    Law,
    Lamn,
    Empirical,
    Gaussian,
    Fbm,
    PrakasaRao,
    CrrCompare,
    HazardCheck,
    Tangents,
}

impl CommandKind {
    pub const ALL: [CommandKind; 12] = [
        CommandKind::Price,
        CommandKind::Greeks,
        CommandKind::VarianceCompare,
        CommandKind::Law,
        CommandKind::Lamn,
        CommandKind::Empirical,
        CommandKind::Gaussian,
        CommandKind::Fbm,
        CommandKind::PrakasaRao,
        CommandKind::CrrCompare,
        CommandKind::HazardCheck,
        CommandKind::Tangents,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Price => "price",
            CommandKind::Greeks => "greeks",
            CommandKind::VarianceCompare => "variance-compare",
            CommandKind::Law => "law",
            CommandKind::Lamn => "lamn",
            CommandKind::Empirical => "empirical",
            CommandKind::Gaussian => "gaussian",
            CommandKind::Fbm => "fbm",
            CommandKind::PrakasaRao => "prakasa-rao",
            CommandKind::CrrCompare => "crr-compare",
            CommandKind::HazardCheck => "hazard-check",
            CommandKind::Tangents => "tangents",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            CommandKind::Price => "call price as power minus discounted strike times level",
            CommandKind::Greeks => "delta as power, gamma from the level, Krafft-Plachky infimum",
            CommandKind::VarianceCompare => {
                "decomposition against direct Monte Carlo at equal budget"
            }
            CommandKind::Law => "LAN/LAW diagnostics of the product experiment",
            CommandKind::Lamn => "random-scale likelihood against its normal mixture limit",
            CommandKind::Empirical => "shifted empirical process under the alternative",
            CommandKind::Gaussian => {
                "Girsanov likelihood, Ito exponential and bridge decomposition"
            }
            CommandKind::Fbm => "fractional Brownian likelihood paths",
            CommandKind::PrakasaRao => "regression experiments with density C(H) exp(-|x|^2H)",
            CommandKind::CrrCompare => "binomial tree hedge against Neyman-Pearson power per node",
            CommandKind::HazardCheck => "hazard operator identities for a built-in tangent",
            CommandKind::Tangents => "catalog of built-in tangents",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn params(self) -> Vec<ParamDef> {
        let with_call = |extra: &[ParamDef]| {
            let mut v = CALL.to_vec();
            v.extend_from_slice(extra);
            v
        };
        match self {
            CommandKind::Price => with_call(&[
                p("reps", "1000000", Kind::Count, "Monte Carlo replications"),
                p(
                    "mode",
                    "alternative",
                    Kind::Choice(MODES),
                    "how the power is estimated",
                ),
            ]),
            CommandKind::Greeks => with_call(&[
                p("reps", "1000000", Kind::Count, "Monte Carlo replications"),
                p(
                    "h",
                    "0.001",
                    Kind::Float,
                    "spot bump of the Monte Carlo finite difference",
                ),
                p(
                    "gamma_h",
                    "0.0001",
                    Kind::Float,
                    "spot bump of the gamma difference",
                ),
                p(
                    "k_max",
                    "5",
                    Kind::Float,
                    "upper end of the Krafft-Plachky grid",
                ),
                p("k_step", "0.001", Kind::Float, "Krafft-Plachky grid step"),
            ]),
            CommandKind::VarianceCompare => {
                let mut v =
                    with_call(&[p("budget", "200000", Kind::Count, "total number of draws")]);
                v[0].default = "1";
                v
            }
            CommandKind::Law => vec![
                p(
                    "tangent",
                    "linear",
                    Kind::Choice(TANGENTS),
                    "built-in tangent",
                ),
                p("n", "100,1000,10000", Kind::CountList, "sample sizes"),
                p("reps", "1000", Kind::Count, "paths per sample size"),
                p(
                    "grid_points",
                    "33",
                    Kind::Count,
                    "time grid points on [0, 1]",
                ),
            ],
            CommandKind::Lamn => vec![
                p(
                    "tangent",
                    "linear",
                    Kind::Choice(TANGENTS),
                    "built-in tangent",
                ),
                p("n", "10000", Kind::Count, "sample size"),
                p("reps", "2000", Kind::Count, "paths"),
                p(
                    "scales",
                    "0.5,1.5",
                    Kind::FloatList,
                    "equiprobable support of the scale",
                ),
            ],
            CommandKind::Empirical => vec![
                p(
                    "tangent",
                    "linear",
                    Kind::Choice(TANGENTS),
                    "built-in tangent",
                ),
                p("n", "10000", Kind::Count, "sample size"),
                p("reps", "2000", Kind::Count, "paths"),
                p(
                    "grid_points",
                    "33",
                    Kind::Count,
                    "time grid points on [0, 1]",
                ),
            ],
            CommandKind::Gaussian => vec![
                p(
                    "tangent",
                    "linear",
                    Kind::Choice(TANGENTS),
                    "tangent whose hazard derivative drives the signal",
                ),
                p("reps", "2000", Kind::Count, "paths"),
                p(
                    "grid_points",
                    "1025",
                    Kind::Count,
                    "time grid points on [0, 1]",
                ),
                p(
                    "tau",
                    "0.9",
                    Kind::Float,
                    "cutoff of the bridge decomposition",
                ),
            ],
            CommandKind::Fbm => vec![
                p("hurst", "0.75", Kind::Float, "Hurst index"),
                p("reps", "2000", Kind::Count, "paths"),
                p(
                    "grid_points",
                    "17",
                    Kind::Count,
                    "time grid points on [0, 1], including 0",
                ),
            ],
            CommandKind::PrakasaRao => vec![
                p("hurst", "0.75", Kind::Float, "Hurst index"),
                p("n", "10000", Kind::Count, "sample size"),
                p("t", "1", Kind::Float, "local parameter"),
                p("reps", "2000", Kind::Count, "replications"),
            ],
            CommandKind::CrrCompare => vec![
                p("steps", "3", Kind::Count, "tree steps"),
                p("up", "1.25", Kind::Float, "up factor"),
                p("down", "0.8", Kind::Float, "down factor"),
                p("growth", "1", Kind::Float, "money-market growth per step"),
                p("s0", "1", Kind::Float, "spot price"),
                p("strike", "1", Kind::Float, "strike"),
            ],
            CommandKind::HazardCheck => vec![
                p(
                    "tangent",
                    "linear",
                    Kind::Choice(TANGENTS),
                    "built-in tangent",
                ),
                p("grid_points", "1000", Kind::Count, "check points on [0, 1]"),
                p(
                    "t",
                    "0.5",
                    Kind::Float,
                    "time of the conditional projection",
                ),
            ],
            CommandKind::Tangents => Vec::new(),
        }
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Float(f64),
    Count(usize),
    Choice(String),
    FloatList(Vec<f64>),
    CountList(Vec<usize>),
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Count(v) => write!(f, "{v}"),
            ParamValue::Choice(s) => f.write_str(s),
            ParamValue::FloatList(v) => f.write_str(&join(v)),
            ParamValue::CountList(v) => f.write_str(&join(v)),
        }
    }
}

fn parse_value(def: &ParamDef, raw: &str) -> Result<ParamValue, CliError> {
    let raw = raw.trim();
    let bad = |what: &str| CliError::Config {
        key: def.name.to_string(),
        message: format!("expected {what}, got '{raw}'"),
    };
    let float = |s: &str| s.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    let count = |s: &str| s.trim().parse::<usize>().ok();
    Ok(match def.kind {
        Kind::Float => ParamValue::Float(float(raw).ok_or_else(|| bad("a finite number"))?),
        Kind::Count => ParamValue::Count(count(raw).ok_or_else(|| bad("a nonnegative integer"))?),
        Kind::Choice(options) => {
            if !options.contains(&raw) {
                return Err(bad(&format!("one of {}", options.join("|"))));
            }
            ParamValue::Choice(raw.to_string())
        }
        Kind::FloatList => ParamValue::FloatList(
            raw.split(',')
                .map(float)
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| bad("a comma-separated list of numbers"))?,
        ),
        Kind::CountList => ParamValue::CountList(
            raw.split(',')
                .map(count)
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| bad("a comma-separated list of integers"))?,
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn parse(raw: &str) -> Result<Self, CliError> {
        match raw.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Config {
                key: "format".into(),
                message: format!("expected csv|json, got '{other}'"),
            }),
        }
    }
}

/// Fully resolved run. `workers` affects scheduling only and is not part of
/// the recorded configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub params: BTreeMap<String, ParamValue>,
    pub seed: u64,
    pub workers: usize,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    fn get(&self, name: &str) -> &ParamValue {
        self.params
            .get(name)
            .unwrap_or_else(|| panic!("parameter '{name}' is not defined for {}", self.command))
    }

    pub fn float(&self, name: &str) -> f64 {
        match self.get(name) {
            ParamValue::Float(v) => *v,
            other => panic!("parameter '{name}' is not a number: {other:?}"),
        }
    }

    pub fn count(&self, name: &str) -> usize {
        match self.get(name) {
            ParamValue::Count(v) => *v,
            other => panic!("parameter '{name}' is not a count: {other:?}"),
        }
    }

    pub fn choice(&self, name: &str) -> &str {
        match self.get(name) {
            ParamValue::Choice(v) => v,
            other => panic!("parameter '{name}' is not a choice: {other:?}"),
        }
    }

    pub fn floats(&self, name: &str) -> &[f64] {
        match self.get(name) {
            ParamValue::FloatList(v) => v,
            other => panic!("parameter '{name}' is not a list: {other:?}"),
        }
    }

    pub fn counts(&self, name: &str) -> &[usize] {
        match self.get(name) {
            ParamValue::CountList(v) => v,
            other => panic!("parameter '{name}' is not a list: {other:?}"),
        }
    }

    /// `key=value` pairs in key order, the seed last.
    pub fn canonical_pairs(&self) -> Vec<(String, String)> {
        let mut v: Vec<(String, String)> = self
            .params
            .iter()
            .map(|(k, val)| (k.clone(), val.to_string()))
            .collect();
        v.push(("seed".into(), self.seed.to_string()));
        v
    }
}

/// Keys a config file may set besides the command parameters.
const RUN_KEYS: [&str; 4] = ["seed", "workers", "output", "format"];

/// Flat `key = value` lines; `#` starts a comment.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config {
            key: "config".into(),
            message: format!("line {}: expected key = value", lineno + 1),
        })?;
        let key = k.trim().replace('-', "_");
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Config {
                key,
                message: format!("line {}: duplicate key", lineno + 1),
            });
        }
    }
    Ok(out)
}

/// Raw inputs before precedence is applied.
#[derive(Debug, Clone, Default)]
pub struct RawInputs {
    pub flags: BTreeMap<String, String>,
    pub file: BTreeMap<String, String>,
    pub env_seed: Option<String>,
    pub default_workers: usize,
}

/// Flags override the config file, which overrides defaults; the seed falls
/// back to the environment before its default.
pub fn resolve(command: CommandKind, raw: &RawInputs) -> Result<RunConfig, CliError> {
    let defs = command.params();
    for key in raw.file.keys() {
        if !RUN_KEYS.contains(&key.as_str()) && !defs.iter().any(|d| d.name == key) {
            return Err(CliError::Config {
                key: key.clone(),
                message: format!("unknown key for command '{command}'"),
            });
        }
    }
    let pick = |key: &str| raw.flags.get(key).or_else(|| raw.file.get(key));
    let mut params = BTreeMap::new();
    for def in &defs {
        let value = match pick(def.name) {
            Some(v) => v.as_str(),
            None => def.default,
        };
        params.insert(def.name.to_string(), parse_value(def, value)?);
    }
    let seed = match pick("seed").cloned().or_else(|| raw.env_seed.clone()) {
        Some(s) => s.trim().parse::<u64>().map_err(|_| CliError::Config {
            key: "seed".into(),
            message: format!("expected a 64-bit unsigned integer, got '{s}'"),
        })?,
        None => DEFAULT_SEED,
    };
    let workers = match pick("workers") {
        Some(w) => match w.trim().parse::<usize>() {
            Ok(n) if n >= 1 => n,
            _ => {
                return Err(CliError::Config {
                    key: "workers".into(),
                    message: format!("expected a positive integer, got '{w}'"),
                })
            }
        },
        None => raw.default_workers.max(1),
    };
    let format = match pick("format") {
        Some(f) => Format::parse(f)?,
        None => Format::Csv,
    };
    Ok(RunConfig {
        command,
        params,
        seed,
        workers,
        output: pick("output").map(PathBuf::from),
        format,
    })
}
