//! Report assembly: a JSON document with sorted keys and a digest over
//! everything except the wall time, plus RFC-4180 CSV tables.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io {
            path: self.name.to_string(),
            message: e.to_string(),
        };
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io {
            path: self.name.to_string(),
            message: e.to_string(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Everything a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub command: &'static str,
    pub input_name: Option<String>,
    pub input_sha256: String,
    pub parameters: Value,
    pub result: Value,
    pub residuals: Value,
    pub tables: Vec<Table>,
    pub wall_time_ms: f64,
    /// Reported after the document is written (e.g. a sweep cut short).
    pub deferred_error: Option<CliError>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Finite floats as numbers, anything else as a string.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn csv_path(out: &Path, table: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    out.with_file_name(format!("{stem}.{table}.csv"))
}

/// The JSON document; `wall_time_ms` is left out of `report_digest`.
pub fn document(outcome: &Outcome, out: Option<&Path>) -> Value {
    let tables: Vec<Value> = outcome
        .tables
        .iter()
        .map(|t| {
            let file = out.map(|o| {
                csv_path(o, t.name)
                    .file_name()
                    .unwrap()
                    .to_string_lossy()
                    .into_owned()
            });
            json!({ "name": t.name, "rows": t.rows.len(), "file": file })
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("tool".into(), json!("rpfkit"));
    doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    doc.insert("command".into(), json!(outcome.command));
    doc.insert(
        "input".into(),
        json!({ "name": outcome.input_name, "sha256": outcome.input_sha256 }),
    );
    doc.insert("parameters".into(), outcome.parameters.clone());
    doc.insert("result".into(), outcome.result.clone());
    doc.insert("residuals".into(), outcome.residuals.clone());
    doc.insert("tables".into(), Value::Array(tables));
    if let Some(e) = &outcome.deferred_error {
        doc.insert(
            "error".into(),
            json!({ "message": e.to_string(), "exit_status": e.exit_code() }),
        );
    }
    let digest = sha256_hex(Value::Object(doc.clone()).to_string().as_bytes());
    doc.insert("report_digest".into(), json!(digest));
    doc.insert("wall_time_ms".into(), num(outcome.wall_time_ms));
    Value::Object(doc)
}

pub fn emit(outcome: &Outcome, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&document(outcome, out)).expect("report serializes") + "\n";
    let write = |path: &Path, data: &str| {
        std::fs::write(path, data).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    };
    match out {
        Some(path) => {
            write(path, &text)?;
            for t in &outcome.tables {
                write(&csv_path(path, t.name), &t.to_csv()?)?;
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}
