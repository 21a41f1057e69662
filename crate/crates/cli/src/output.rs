//! Error mapping, JSON/CSV emission and state I/O.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::ValueEnum;
use num_complex::Complex64;
use serde_json::{json, Value};

use qig_core::linalg::ComplexMatrix;
use qig_core::state::DensityMatrix;
use qig_core::Error;

pub const SCHEMA: &str = "qig/1";

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit 2.
    Invalid(String),
    /// Numerical breakdown: exit 1.
    Numeric(String),
    /// A check ran and failed: exit 1.
    CheckFailed(String),
    Io(String),
}

impl CliError {
    pub fn report(&self) -> ExitCode {
        let (msg, code) = match self {
            CliError::Invalid(m) => (format!("error: {m}"), 2),
            CliError::Numeric(m) => (format!("numeric failure: {m}"), 1),
            CliError::CheckFailed(m) => (format!("check failed: {m}"), 1),
            CliError::Io(m) => (format!("i/o error: {m}"), 1),
        };
        eprintln!("{msg}");
        ExitCode::from(code)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn emit_text(path: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

pub fn emit(path: &Option<PathBuf>, v: &Value, _format: Format) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Numeric(e.to_string()))?;
    s.push('\n');
    emit_text(path, &s)
}

/// Row-major entries as `[re, im, re, im, ...]`.
pub fn matrix_entries(m: &ComplexMatrix) -> Value {
    json!(m.entries().iter().flat_map(|c| [c.re, c.im]).collect::<Vec<f64>>())
}

pub fn state_to_json(rho: &DensityMatrix) -> Value {
    json!({ "schema": SCHEMA, "n": rho.dim(), "entries": matrix_entries(rho.matrix()) })
}

pub fn read_state(path: &Path) -> Result<DensityMatrix, CliError> {
    let bad = |m: String| CliError::Invalid(format!("{}: {m}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let n = v["n"].as_u64().ok_or_else(|| bad("missing integer \"n\"".into()))? as usize;
    let flat: Vec<f64> = v["entries"]
        .as_array()
        .ok_or_else(|| bad("missing \"entries\" array".into()))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| bad("non-numeric entry".into())))
        .collect::<Result<_, _>>()?;
    if flat.len() != 2 * n * n {
        return Err(bad(format!("expected {} numbers, got {}", 2 * n * n, flat.len())));
    }
    let entries = flat.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok(DensityMatrix::new(ComplexMatrix::new(n, entries)?)?)
}
