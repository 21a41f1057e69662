//! `--config FILE` support: keys become flags placed right after the subcommand,
//! so explicit command-line flags override them.

use std::ffi::OsString;
use std::fs;

use serde_json::Value;

use crate::output::CliError;

fn scalar(v: &Value, key: &str) -> Result<String, CliError> {
    match v {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        _ => Err(CliError::Invalid(format!("config key {key:?} must be a number, string or list"))),
    }
}

fn to_flags(cfg: &Value) -> Result<Vec<OsString>, CliError> {
    let obj = cfg
        .as_object()
        .ok_or_else(|| CliError::Invalid("config must be a JSON object".into()))?;
    let mut out = Vec::new();
    for (key, v) in obj {
        if key == "config" {
            return Err(CliError::Invalid("config files cannot nest".into()));
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts = items.iter().map(|x| scalar(x, key)).collect::<Result<Vec<_>, _>>()?;
                out.push(flag.into());
                out.push(parts.join(",").into());
            }
            other => {
                out.push(flag.into());
                out.push(scalar(other, key)?.into());
            }
        }
    }
    Ok(out)
}

/// Strip `--config FILE` and splice the file's flags in after the subcommand name.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(it.next().ok_or_else(|| CliError::Invalid("--config needs a file".into()))?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.to_string_lossy())))?;
    let cfg: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.to_string_lossy())))?;
    let flags = to_flags(&cfg)?;
    match rest.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')) {
        Some(i) => {
            let at = i + 2;
            rest.splice(at..at, flags);
        }
        None => rest.extend(flags),
    }
    Ok(rest)
}
