//! `--config` support. File entries become flags placed before the ones given
//! on the command line, so explicit flags win.

use std::ffi::OsString;
use std::path::Path;

use crate::args::SEED_ENV;
use crate::error::CliError;

/// Reads `key = value` lines. `#` and `;` start comments, `[section]` lines are ignored.
pub fn parse_ini(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') || line.starts_with('[') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("config line {}: expected key = value", i + 1)))?;
        let v = v.trim().trim_matches('"');
        out.push((k.trim().to_string(), v.to_string()));
    }
    Ok(out)
}

/// Reads the `meta.config` object of an earlier JSON report.
fn parse_report(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config is not valid JSON: {e}")))?;
    let obj = v
        .pointer("/meta/config")
        .and_then(|c| c.as_object())
        .ok_or_else(|| CliError::Validation("JSON config has no meta.config object".into()))?;
    let mut out = Vec::new();
    for (k, v) in obj {
        let s = match v {
            serde_json::Value::Null => continue,
            serde_json::Value::Bool(b) => b.to_string(),
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Array(items) => {
                if items.is_empty() {
                    continue;
                }
                items.iter().map(scalar).collect::<Vec<_>>().join(",")
            }
            other => scalar(other),
        };
        out.push((k.clone(), s));
    }
    Ok(out)
}

fn scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Turns entries into flags: `true` gives a bare flag, `false` is dropped.
fn to_flags(entries: Vec<(String, String)>) -> Vec<OsString> {
    let seed_from_env = std::env::var_os(SEED_ENV).is_some();
    let mut out = Vec::new();
    for (k, v) in entries {
        // Precedence is flag > environment > file.
        if k == "seed" && seed_from_env {
            continue;
        }
        match v.as_str() {
            "true" => out.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{k}").into());
                out.push(v.into());
            }
        }
    }
    out
}

fn find_config(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Inserts the entries of a `--config` file right after the subcommand.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = find_config(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    let entries = if text.trim_start().starts_with('{') {
        parse_report(&text)?
    } else {
        parse_ini(&text)?
    };
    let flags = to_flags(entries);
    if args.len() < 2 {
        return Ok(args);
    }
    let mut out = Vec::with_capacity(args.len() + flags.len());
    out.extend_from_slice(&args[..2]);
    out.extend(flags);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}
