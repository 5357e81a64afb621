//! Tables, their CSV and JSON forms, and run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Common, Format};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i128),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i128)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i128)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl Cell {
    /// 17 significant digits for floats.
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Float(x) => x.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn display(&self, precision: usize) -> String {
        match self {
            Cell::Float(x) => format!("{x:.precision$}"),
            other => other.csv(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => match i64::try_from(*v) {
                Ok(v) => json!(v),
                Err(_) => json!(v.to_string()),
            },
            Cell::Float(x) => json!(x),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    Value::Object(
                        self.header
                            .iter()
                            .cloned()
                            .zip(row.iter().map(Cell::json))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    /// Aligned text for the terminal, floats shown to `precision` digits.
    pub fn display(&self, precision: usize) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|c| c.display(precision)).collect())
            .collect();
        let widths: Vec<usize> = (0..self.header.len())
            .map(|i| {
                cells
                    .iter()
                    .map(|r| r[i].len())
                    .chain([self.header[i].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, items: &[String]| {
            let parts: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &self.header);
        for r in &cells {
            line(&mut out, r);
        }
        out
    }
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Report {
    /// File stem, usually the command name.
    pub stem: String,
    /// The primary table, written as `<stem>.csv` in CSV mode.
    pub table: Table,
    /// Full structured result, written as `<stem>.json` in JSON mode.
    pub json: Value,
    /// Extra CSV files written regardless of format.
    pub extra_csv: Vec<(String, Table)>,
    /// Fully resolved parameters, echoed in the manifest.
    pub params: Value,
    /// Optional text printed to stdout instead of the table.
    pub summary: Option<String>,
    /// Optional text printed after whatever went to stdout.
    pub footer: Option<String>,
}

impl Report {
    pub fn new(stem: &str, table: Table, json: Value, params: impl Serialize) -> Result<Self, CliError> {
        Ok(Self {
            stem: stem.to_string(),
            table,
            json,
            extra_csv: Vec::new(),
            params: serde_json::to_value(params).map_err(|e| CliError::Config(e.to_string()))?,
            summary: None,
            footer: None,
        })
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Writes the report and its manifest under `common.output_dir` and
/// returns the paths written.
pub fn emit(report: &Report, common: &Common, command: &str) -> Result<Vec<PathBuf>, CliError> {
    let dir = &common.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.clone(),
        source: e,
    })?;
    let mut files = Vec::new();
    let primary = match common.format {
        Format::Csv => (format!("{}.csv", report.stem), report.table.to_csv()),
        Format::Json => (format!("{}.json", report.stem), pretty(&report.json)),
    };
    files.push(primary);
    for (name, table) in &report.extra_csv {
        files.push((format!("{name}.csv"), table.to_csv()));
    }
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "common": {
            "format": common.format,
            "seed": common.seed,
            "precision": common.precision,
        },
        "params": report.params,
        "outputs": files.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
    });
    files.push((format!("{}.manifest.json", report.stem), pretty(&manifest)));
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = dir.join(name);
        write(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}
