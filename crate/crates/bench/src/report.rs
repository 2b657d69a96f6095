//! Output documents: a versioned table plus the config that produced it.
//!
//! CSV and TSV files start with `# ksvd-bench <schema>` and
//! `# config: <json>` lines; JSON documents carry the same two fields at
//! the top level.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::cli::{Format, RunConfig};
use crate::error::{BenchError, Result};

pub const SCHEMA_PREFIX: &str = "# ksvd-bench ";
pub const CONFIG_PREFIX: &str = "# config: ";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Int(u64),
    Float(f64),
    Na,
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Na => "NA".into(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Str(s) => Value::String(s.clone()),
            Cell::Int(i) => json!(i),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(_) | Cell::Na => Value::Null,
        }
    }
}

/// Shortest round-trip text; scientific notation for very small or large
/// magnitudes.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Cell {
        Cell::Str(s.into())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Cell {
        Cell::Str(s)
    }
}
impl From<usize> for Cell {
    fn from(i: usize) -> Cell {
        Cell::Int(i as u64)
    }
}
impl From<u64> for Cell {
    fn from(i: u64) -> Cell {
        Cell::Int(i)
    }
}
impl From<f64> for Cell {
    fn from(x: f64) -> Cell {
        Cell::Float(x)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Cell {
        x.map_or(Cell::Na, Into::into)
    }
}

#[derive(Debug, Clone)]
pub struct Document {
    /// `name/vN`; bumping `N` is how column changes are announced.
    pub schema: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
    /// Additional JSON-only payload.
    pub extra: Option<Value>,
}

impl Document {
    pub fn new(schema: &'static str, columns: &'static [&'static str]) -> Self {
        Document {
            schema,
            columns,
            rows: Vec::new(),
            extra: None,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "{}", self.schema);
        self.rows.push(row);
    }

    pub fn render(&self, format: Format, config: &RunConfig) -> Result<String> {
        let config_json = serde_json::to_string(config)?;
        match format {
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(c, v)| (c.to_string(), v.json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut doc = Map::new();
                doc.insert("schema".into(), json!(self.schema));
                doc.insert("config".into(), serde_json::to_value(config)?);
                doc.insert("rows".into(), Value::Array(rows));
                if let Some(extra) = &self.extra {
                    doc.insert("extra".into(), extra.clone());
                }
                let mut s = serde_json::to_string_pretty(&Value::Object(doc))?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv | Format::Tsv => {
                let mut out = format!("{SCHEMA_PREFIX}{}\n{CONFIG_PREFIX}{config_json}\n", self.schema);
                let delim = if format == Format::Csv { b',' } else { b'\t' };
                if format == Format::Tsv {
                    // Header as a comment so gnuplot skips it.
                    out.push_str("# ");
                }
                let mut w = csv::WriterBuilder::new().delimiter(delim).from_writer(Vec::new());
                w.write_record(self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::text))?;
                }
                let bytes = w.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
                out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
                Ok(out)
            }
        }
    }
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Secondary reports go next to the primary file, or to stderr.
pub fn emit_secondary(text: &str, primary: Option<&Path>, suffix: &str) -> Result<Option<PathBuf>> {
    match primary {
        Some(p) => {
            let path = sidecar_path(p, suffix);
            fs::write(&path, text)?;
            Ok(Some(path))
        }
        None => {
            eprint!("{text}");
            Ok(None)
        }
    }
}

/// `out.csv` + `summary.json` -> `out.csv.summary.json`.
pub fn sidecar_path(primary: &Path, suffix: &str) -> PathBuf {
    let mut name = primary.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

/// Recovers the run config from any file this tool wrote.
pub fn extract_config(path: &Path) -> Result<RunConfig> {
    let bytes = fs::read(path)?;
    if let Ok(text) = std::str::from_utf8(&bytes) {
        if let Some(line) = text.lines().find_map(|l| l.strip_prefix(CONFIG_PREFIX)) {
            return Ok(serde_json::from_str(line)?);
        }
        if let Ok(Value::Object(doc)) = serde_json::from_str::<Value>(text) {
            if let Some(cfg) = doc.get("config") {
                return Ok(serde_json::from_value(cfg.clone())?);
            }
        }
    }
    let sidecar = sidecar_path(path, "config.json");
    if sidecar.exists() {
        return extract_config(&sidecar);
    }
    Err(BenchError::Config(format!(
        "{} carries no embedded config",
        path.display()
    )))
}

/// Blanks every timing field so two runs can be compared byte for byte.
/// Timing fields are the columns and JSON keys containing `seconds`.
pub fn mask_timing(text: &str) -> String {
    if let Ok(mut v) = serde_json::from_str::<Value>(text) {
        mask_json(&mut v);
        return serde_json::to_string_pretty(&v).expect("re-serializing parsed json");
    }
    let mut out = String::new();
    let mut timing_cols: Vec<usize> = Vec::new();
    let mut header_seen = false;
    for line in text.lines() {
        let (is_tsv_header, body) = match line.strip_prefix("# ") {
            Some(rest) if !rest.starts_with("ksvd-bench") && !rest.starts_with("config:") => (true, rest),
            _ => (false, line),
        };
        if line.starts_with('#') && !is_tsv_header {
            out.push_str(line);
            out.push('\n');
            continue;
        }
        let delim = if body.contains('\t') { '\t' } else { ',' };
        let fields: Vec<&str> = body.split(delim).collect();
        if !header_seen {
            header_seen = true;
            timing_cols = fields
                .iter()
                .enumerate()
                .filter(|(_, f)| f.contains("seconds"))
                .map(|(i, _)| i)
                .collect();
            out.push_str(line);
        } else {
            let masked: Vec<&str> = fields
                .iter()
                .enumerate()
                .map(|(i, f)| if timing_cols.contains(&i) { "-" } else { f })
                .collect();
            out.push_str(&masked.join(&delim.to_string()));
        }
        out.push('\n');
    }
    out
}

fn mask_json(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for (k, val) in map.iter_mut() {
                if k.contains("seconds") {
                    *val = Value::Null;
                } else {
                    mask_json(val);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(mask_json),
        _ => {}
    }
}
