//! Command-line front end: argument parsing, configuration resolution and
//! report output.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;

use clap::{Arg, ArgAction, ArgMatches, Command};

use config::{parse_config_file, resolve, CommandKind, RawInputs, RunConfig, SEED_ENV};
use error::CliError;
use report::Report;

const GLOBAL: [(&str, &str); 5] = [
    ("config", "key=value configuration file"),
    ("seed", "master seed (default: $LECAM_SEED, then 1)"),
    ("workers", "worker threads; does not change results"),
    ("output", "write the report here instead of stdout"),
    ("format", "csv or json"),
];

fn flag(name: &str) -> String {
    name.replace('_', "-")
}

pub fn build_cli() -> Command {
    let mut app = Command::new("lecam")
        .about("Likelihood-ratio pricing and limit-experiment simulations")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, help) in GLOBAL {
        app = app.arg(
            Arg::new(name)
                .long(name)
                .global(true)
                .value_name(name.to_uppercase())
                .help(help),
        );
    }
    for kind in CommandKind::ALL {
        let mut sub = Command::new(kind.name()).about(kind.about());
        for def in kind.params() {
            sub = sub.arg(
                Arg::new(def.name)
                    .long(flag(def.name))
                    .value_name("VALUE")
                    .action(ArgAction::Set)
                    .allow_negative_numbers(true)
                    .help(format!("{} [default: {}]", def.help, def.default)),
            );
        }
        app = app.subcommand(sub);
    }
    app
}

fn raw_inputs(kind: CommandKind, m: &ArgMatches) -> Result<RawInputs, CliError> {
    let mut flags = BTreeMap::new();
    let names = kind
        .params()
        .into_iter()
        .map(|d| d.name)
        .chain(GLOBAL.iter().map(|g| g.0).filter(|&n| n != "config"));
    for name in names {
        if let Some(v) = m.get_one::<String>(name) {
            flags.insert(name.to_string(), v.clone());
        }
    }
    let file = match m.get_one::<String>("config") {
        Some(path) => parse_config_file(path.as_ref())?,
        None => BTreeMap::new(),
    };
    Ok(RawInputs {
        flags,
        file,
        env_seed: std::env::var(SEED_ENV).ok(),
        default_workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
    })
}

/// Parse, run and render. Returns the resolved configuration and the report bytes.
pub fn run_to_bytes<I, T>(args: I) -> Result<(RunConfig, Vec<u8>), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = build_cli().try_get_matches_from(args).map_err(|e| {
        let text = e.to_string();
        let first = text.lines().next().unwrap_or_default();
        CliError::Usage(first.trim_start_matches("error: ").to_string())
    })?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let kind = CommandKind::from_name(name).expect("registered subcommand");
    let config = resolve(kind, &raw_inputs(kind, sub)?)?;
    let rows = commands::execute(&config)?;
    let bytes = Report::new(&config, rows).render(config.format)?;
    Ok((config, bytes))
}

fn emit(config: &RunConfig, bytes: &[u8]) -> Result<(), CliError> {
    match &config.output {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io {
                path: "<stdout>".into(),
                message: e.to_string(),
            }),
    }
}

/// Full program: returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    // help and version go through clap's own printer
    if let Err(e) = build_cli().try_get_matches_from(&args) {
        use clap::error::ErrorKind::*;
        if matches!(
            e.kind(),
            DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand
        ) {
            let _ = e.print();
            return 0;
        }
    }
    let result = run_to_bytes(&args).and_then(|(config, bytes)| emit(&config, &bytes));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let record = serde_json::to_string(&e.record()).expect("serializable record");
            eprintln!("{record}");
            e.status()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_command_is_registered() {
        let app = build_cli();
        for kind in CommandKind::ALL {
            let sub = app
                .find_subcommand(kind.name())
                .unwrap_or_else(|| panic!("{}", kind.name()));
            for def in kind.params() {
                let arg = sub.get_arguments().find(|a| a.get_id() == def.name);
                assert!(arg.is_some(), "{} --{}", kind.name(), def.name);
            }
        }
    }

    #[test]
    fn flags_use_dashes() {
        let (config, _) = run_to_bytes([
            "lecam",
            "hazard-check",
            "--grid-points",
            "11",
            "--workers",
            "1",
        ])
        .unwrap();
        assert_eq!(config.count("grid_points"), 11);
    }

    #[test]
    fn negative_values_reach_validation() {
        let err = run_to_bytes(["lecam", "price", "--sigma", "-1"]).unwrap_err();
        assert_eq!(err.status(), 2);
        assert_eq!(err.record().constraint.as_deref(), Some("sigma"));
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        let err = run_to_bytes(["lecam", "price", "--nope", "1"]).unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
        assert_eq!(err.status(), 2);
    }
}
