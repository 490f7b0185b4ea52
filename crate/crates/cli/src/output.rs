//! Bit-stable report files: JSON with sorted keys and every float printed
//! with 17 significant digits, CSV with the same number format, and a
//! manifest hashing parameters and artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

/// A named numeric table, exported as `<name>.csv` (or `<name>.json`).
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_float(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj = self.header.iter().zip(row).map(|(h, &v)| (h.clone(), float_value(v)));
                    Value::Object(obj.collect())
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct Checks(pub Vec<CheckOutcome>);

impl Checks {
    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        let detail = detail.into();
        if passed {
            log::info!("check {name}: ok ({detail})");
        } else {
            log::warn!("check {name}: FAILED ({detail})");
        }
        self.0.push(CheckOutcome {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn failures(&self) -> Vec<&CheckOutcome> {
        self.0.iter().filter(|c| !c.passed).collect()
    }
}

/// Everything a scenario or tool produces.
#[derive(Debug)]
pub struct Outcome {
    pub command: String,
    /// The full parameter record; replaying it reproduces the run.
    pub params: Value,
    pub results: Value,
    pub tables: Vec<Table>,
    pub checks: Checks,
}

/// `17` significant digits, shortest exponent form; non-finite values as
/// `inf`, `-inf`, `nan`.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:.16e}")
}

fn float_value(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::String(fmt_float(v))
    }
}

/// Canonical JSON text: keys sorted (serde_json's default map is ordered),
/// two-space indentation, floats via [`fmt_float`].
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.push_str(&"  ".repeat(d));
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => write!(out, "{u}").unwrap(),
            (_, Some(i)) => write!(out, "{i}").unwrap(),
            _ => out.push_str(&fmt_float(n.as_f64().expect("finite json number"))),
        },
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Canonicalized through a `Value` so that float formatting and key order
/// match the files on disk.
pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

/// The record that `replay` reads back.
pub fn params_record(command: &str, params: &Value) -> Value {
    json!({
        "command": command,
        "defaults_version": crate::params::defaults_version(),
        "params": params,
    })
}

/// Writes the outcome under `dir` and returns the manifest path.
pub fn write_outcome(outcome: &Outcome, dir: &Path, format: Format) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut artifacts = Vec::new();
    let mut emit = |name: String, text: String| -> Result<()> {
        let path = dir.join(&name);
        fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        artifacts.push(json!({
            "path": name,
            "bytes": text.len(),
            "sha256": sha256_hex(text.as_bytes()),
        }));
        Ok(())
    };
    let record = params_record(&outcome.command, &outcome.params);
    let record_text = canonical_json(&record);
    let params_sha256 = sha256_hex(record_text.as_bytes());
    emit("params.json".into(), record_text)?;
    let report = json!({
        "command": outcome.command,
        "params": outcome.params,
        "results": outcome.results,
        "checks": to_value(&outcome.checks.0),
    });
    emit("report.json".into(), canonical_json(&report))?;
    for table in &outcome.tables {
        if format.csv() {
            emit(format!("{}.csv", table.name), table.to_csv())?;
        }
        if format.json() {
            emit(format!("{}.json", table.name), canonical_json(&table.to_json()))?;
        }
    }
    let failures: Vec<Value> = outcome.checks.failures().into_iter().map(to_value).collect();
    let manifest = json!({
        "command": outcome.command,
        "params_sha256": params_sha256,
        "artifacts": artifacts,
        "checks_run": outcome.checks.0.len(),
        "passed": failures.is_empty(),
        "failures": failures,
    });
    let path = dir.join("manifest.json");
    fs::write(&path, canonical_json(&manifest)).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
