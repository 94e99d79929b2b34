//! `key = value` config files and the resolved-config record.
//!
//! Keys are the long flag names of the chosen subcommand (`batch-size` and
//! `batch_size` are both accepted). Flags given on the command line win over
//! the file; the file wins over environment variables and defaults.

use crate::CliError;
use clap::parser::ValueSource;
use clap::{ArgMatches, Command};
use std::path::Path;

/// Arguments that never enter the resolved config.
const UNRECORDED: [&str; 4] = ["config", "threads", "help", "version"];

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::new("config", format!("line {} is not key = value: {line:?}", k + 1)))?;
        out.push((key.trim().replace('_', "-"), value.trim().to_string()));
    }
    Ok(out)
}

/// Value of `--config` in raw arguments, if any.
pub fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Appends config entries not already given on the command line.
pub fn merge(
    root: &Command,
    matches: &ArgMatches,
    mut args: Vec<String>,
    entries: &[(String, String)],
) -> Result<Vec<String>, CliError> {
    let (name, sub_m) = matches
        .subcommand()
        .ok_or_else(|| CliError::new("usage", "a subcommand is required"))?;
    let sub = root
        .find_subcommand(name)
        .ok_or_else(|| CliError::new("usage", format!("unknown subcommand {name}")))?;
    for (key, value) in entries {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| CliError::new("config", format!("unknown key {key:?} for {name}")))?;
        if UNRECORDED.contains(&arg.get_id().as_str()) {
            return Err(CliError::new(
                "config",
                format!("key {key:?} is not allowed in a config file"),
            ));
        }
        if sub_m.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
            continue;
        }
        if arg.get_action().takes_values() {
            args.push(format!("--{key}={value}"));
        } else {
            match value.as_str() {
                "true" => args.push(format!("--{key}")),
                "false" => {}
                _ => {
                    return Err(CliError::new(
                        "config",
                        format!("flag {key:?} takes true or false, got {value:?}"),
                    ))
                }
            }
        }
    }
    Ok(args)
}

/// Every effective long option of the subcommand as sorted `key = value`
/// lines, loadable again with `--config`.
pub fn resolved(root: &Command, matches: &ArgMatches) -> Option<(String, String)> {
    let (name, sub_m) = matches.subcommand()?;
    let sub = root.find_subcommand(name)?;
    let mut lines = Vec::new();
    for arg in sub.get_arguments() {
        let id = arg.get_id().as_str();
        let Some(long) = arg.get_long() else { continue };
        if UNRECORDED.contains(&id) {
            continue;
        }
        let Some(raw) = sub_m.get_raw(id) else { continue };
        let values: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
        lines.push(format!("{long} = {}", values.join(",")));
    }
    lines.sort();
    let text = format!("# graphpde {name}\n{}\n", lines.join("\n"));
    Some((name.to_string(), text))
}

/// Writes `<dir>/resolved/<command>-<hash prefix>.cfg` and returns the hash.
pub fn write_resolved(dir: &Path, command: &str, text: &str) -> Result<String, CliError> {
    let hash = graphpde::io::sha256_hex(text.as_bytes());
    let path = dir.join("resolved").join(format!("{command}-{}.cfg", &hash[..12]));
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::new("io", format!("{}: {e}", parent.display())))?;
    }
    graphpde::io::write_atomic(&path, text.as_bytes()).map_err(CliError::from)?;
    Ok(hash)
}
