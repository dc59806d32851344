//! Tables, reports and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::I(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

/// 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::F(v) => fmt_float(*v),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::I(v) => Value::from(*v),
            Cell::S(s) => Value::from(s.clone()),
            Cell::B(b) => Value::from(*b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_columns(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Table(Table),
    Report(Value),
}

impl Output {
    pub fn report<T: Serialize>(value: &T) -> Self {
        Output::Report(serde_json::to_value(value).expect("report types serialize"))
    }

    fn default_format(&self) -> Format {
        match self {
            Output::Table(_) => Format::Csv,
            Output::Report(_) => Format::Json,
        }
    }
}

/// A named output; the first one of a run is the primary.
pub struct Artifact {
    pub suffix: Option<&'static str>,
    pub output: Output,
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&key(k), x, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| flatten(&key(&i.to_string()), x, out)),
        Value::Number(n) => out.push((prefix.into(), n.as_f64().map_or_else(|| n.to_string(), fmt_float))),
        Value::Null => out.push((prefix.into(), String::new())),
        Value::String(s) => out.push((prefix.into(), s.clone())),
        Value::Bool(b) => out.push((prefix.into(), b.to_string())),
    }
}

pub fn render(output: &Output, format: Format) -> Result<Vec<u8>, CliError> {
    let io = |e: csv::Error| CliError::Io(e.to_string());
    match (output, format) {
        (Output::Table(t), Format::Csv) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&t.columns).map_err(io)?;
            for row in &t.rows {
                w.write_record(row.iter().map(Cell::text)).map_err(io)?;
            }
            w.into_inner().map_err(|e| CliError::Io(e.to_string()))
        }
        (Output::Table(t), Format::Json) => {
            let mut obj = Map::new();
            obj.insert("columns".into(), Value::from(t.columns.clone()));
            let rows = t.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
            obj.insert("rows".into(), Value::Array(rows));
            json_bytes(&Value::Object(obj))
        }
        (Output::Report(v), Format::Json) => json_bytes(v),
        (Output::Report(v), Format::Csv) => {
            let mut pairs = Vec::new();
            flatten("", v, &mut pairs);
            let mut t = Table::new(&["field", "value"]);
            for (k, x) in pairs {
                t.push(vec![Cell::S(k), Cell::S(x)]);
            }
            render(&Output::Table(t), Format::Csv)
        }
    }
}

fn json_bytes(v: &Value) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: Value,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

fn sibling(path: &Path, suffix: &str, format: Format) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    path.with_file_name(format!("{stem}.{suffix}.{ext}"))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Writes every artifact to `out` (or stdout) and returns the written paths.
pub fn emit(artifacts: &[Artifact], format: Option<Format>, out: Option<&Path>) -> Result<Vec<String>, CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    let mut written = Vec::new();
    for (i, a) in artifacts.iter().enumerate() {
        let fmt = format.unwrap_or_else(|| a.output.default_format());
        let bytes = render(&a.output, fmt)?;
        match out {
            Some(path) => {
                let target = match (i, a.suffix) {
                    (0, _) | (_, None) => path.to_path_buf(),
                    (_, Some(s)) => sibling(path, s, fmt),
                };
                std::fs::write(&target, bytes).map_err(io)?;
                written.push(target.display().to_string());
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(&bytes).map_err(io)?;
            }
        }
    }
    Ok(written)
}

pub fn write_manifest(manifest: &RunManifest, out: Option<&Path>) -> Result<(), CliError> {
    let bytes = json_bytes(&serde_json::to_value(manifest).map_err(|e| CliError::Io(e.to_string()))?)?;
    match out {
        Some(path) => std::fs::write(manifest_path(path), bytes).map_err(|e| CliError::Io(e.to_string())),
        None => std::io::stderr().write_all(&bytes).map_err(|e| CliError::Io(e.to_string())),
    }
}
