//! TOML configuration merged into the argument list.
//!
//! Top-level keys and the keys of the table named after the command become
//! `--key value` flags placed before the user's own flags, so anything given
//! on the command line wins. Other tables are ignored.

use std::ffi::OsString;
use std::path::Path;

use crate::error::CliError;

const COMMANDS: [&str; 6] = ["profile", "shoot", "stationary", "simulate", "diagnose", "sweep"];

/// Position of the subcommand in `argv` (0 is the program name).
fn command_position(argv: &[OsString]) -> Option<usize> {
    let mut skip_next = false;
    for (i, arg) in argv.iter().enumerate().skip(1) {
        if skip_next {
            skip_next = false;
            continue;
        }
        let s = arg.to_string_lossy();
        if s == "--config" || s == "--out" {
            skip_next = true;
            continue;
        }
        if COMMANDS.contains(&s.as_ref()) {
            return Some(i);
        }
        if !s.starts_with('-') {
            return None;
        }
    }
    None
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

fn scalar(key: &str, v: &toml::Value) -> Result<Option<String>, CliError> {
    Ok(match v {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(i) => Some(i.to_string()),
        toml::Value::Float(f) => Some(f.to_string()),
        toml::Value::Boolean(true) => Some(String::new()),
        toml::Value::Boolean(false) => None,
        toml::Value::Array(items) => {
            let parts: Result<Vec<String>, CliError> = items
                .iter()
                .map(|x| scalar(key, x).map(|s| s.unwrap_or_default()))
                .collect();
            Some(parts?.join(","))
        }
        _ => {
            return Err(CliError::Invalid(format!(
                "config key {key:?}: unsupported value type"
            )))
        }
    })
}

fn flags_from_table(table: &toml::Table, out: &mut Vec<OsString>) -> Result<(), CliError> {
    for (key, value) in table {
        if value.is_table() {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match scalar(key, value)? {
            Some(s) if s.is_empty() && value.is_bool() => out.push(flag.into()),
            Some(s) => {
                out.push(flag.into());
                out.push(s.into());
            }
            None => {}
        }
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    text.parse::<toml::Table>()
        .map_err(|e| CliError::Invalid(format!("malformed config {}: {e}", path.display())))
}

/// `argv` with the configuration flags spliced in after the subcommand.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let Some(pos) = command_position(&argv) else {
        return Ok(argv);
    };
    let table = load(Path::new(&path))?;
    let command = argv[pos].to_string_lossy().into_owned();
    let mut extra = Vec::new();
    flags_from_table(&table, &mut extra)?;
    if let Some(toml::Value::Table(section)) = table.get(&command) {
        flags_from_table(section, &mut extra)?;
    }
    let mut out = argv[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}
