//! Tabular experiment reports and their CSV/JSON/SVG emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::config::{OutputFormat, ScenarioKind};
use crate::error::{ExperimentError, Result};
use crate::svg;

pub const SCHEMA_VERSION: u32 = 1;

/// JSON Schema of the serialized report.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

/// One table cell. Non-finite floats are stored as `Null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Null,
}

impl Cell {
    pub fn float(x: f64) -> Self {
        if x.is_finite() {
            Self::Float(x)
        } else {
            Self::Null
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Self::Float(x) => Some(*x),
            Self::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Self::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Self::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Self::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Self::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Self::Text(s)
    }
}

/// Formats a float so that parsing the text returns the same value.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.to_owned(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Rows whose text cells match every `(column, value)` pair.
    pub fn filter<'a>(&'a self, keys: &'a [(&'a str, Cell)]) -> impl Iterator<Item = &'a Vec<Cell>> + 'a {
        let idx: Vec<Option<usize>> = keys.iter().map(|(c, _)| self.column(c)).collect();
        self.rows.iter().filter(move |row| {
            idx.iter().zip(keys).all(|(i, (_, v))| i.is_some_and(|i| &row[i] == v))
        })
    }

    /// The single value in `column` of the rows matching `keys`.
    pub fn lookup<'a>(&'a self, keys: &'a [(&'a str, Cell)], column: &str) -> Option<&'a Cell> {
        let c = self.column(column)?;
        let mut rows = self.filter(keys);
        let row = rows.next()?;
        if rows.next().is_some() {
            return None;
        }
        Some(&row[c])
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Int(i) => i.to_string(),
                Cell::Float(x) => fmt_f64(*x),
                Cell::Text(s) => s.clone(),
                Cell::Null => String::new(),
            }))
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }
}

/// A replicate or data item excluded from aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub cell: String,
    pub replicate: usize,
    pub estimator: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub replicates: usize,
    pub dry_run: bool,
    pub tables: Vec<Table>,
    pub failures: Vec<FailureRecord>,
    /// Wall-clock time; kept out of the emitted files so they stay reproducible.
    #[serde(skip)]
    pub timing: Duration,
}

impl ExperimentReport {
    pub fn new(scenario: ScenarioKind, seed: u64, replicates: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario,
            seed,
            replicates,
            dry_run: replicates == 0,
            tables: Vec::new(),
            failures: Vec::new(),
            timing: Duration::ZERO,
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Runtime(format!("invalid report JSON: {e}")))
    }
}

/// Checks a JSON document against [`REPORT_SCHEMA`].
pub fn validate_report_json(text: &str) -> Result<()> {
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).expect("shipped schema is JSON");
    let validator = jsonschema::validator_for(&schema).expect("shipped schema compiles");
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ExperimentError::Runtime(format!("invalid report JSON: {e}")))?;
    let errors: Vec<String> = validator.iter_errors(&doc).map(|e| format!("{}: {e}", e.instance_path)).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(ExperimentError::Runtime(format!("report violates schema: {}", errors.join("; "))))
    }
}

/// Writes the report in the requested formats and returns the paths written.
///
/// CSV: one `<prefix>_<table>.csv` per table. JSON: `<prefix>_report.json`.
/// SVG: the scenario's figures.
pub fn emit_outputs(report: &ExperimentReport, dir: &Path, formats: &[OutputFormat]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    let prefix = report.scenario.file_prefix();
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    for format in formats {
        match format {
            OutputFormat::Csv => {
                for t in &report.tables {
                    files.push((dir.join(format!("{prefix}_{}.csv", t.name)), t.to_csv()));
                }
                if !report.failures.is_empty() {
                    files.push((dir.join(format!("{prefix}_failures.csv")), failure_table(report).to_csv()));
                }
            }
            OutputFormat::Json => files.push((dir.join(format!("{prefix}_report.json")), report.to_json())),
            OutputFormat::Svg => {
                for (name, body) in svg::figures(report) {
                    files.push((dir.join(format!("{prefix}_{name}.svg")), body));
                }
            }
        }
    }
    let mut written = Vec::with_capacity(files.len());
    for (path, body) in files {
        fs::write(&path, body).map_err(|e| ExperimentError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn failure_table(report: &ExperimentReport) -> Table {
    let mut t = Table::new("failures", &["cell", "replicate", "estimator", "message"]);
    for f in &report.failures {
        t.push(vec![f.cell.as_str().into(), f.replicate.into(), f.estimator.as_str().into(), f.message.as_str().into()]);
    }
    t
}

/// Plain-text rendering of a table for the terminal.
pub fn render_text(table: &Table) -> String {
    let cells: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|c| match c {
                    Cell::Int(i) => i.to_string(),
                    Cell::Float(x) => format!("{x:.4}"),
                    Cell::Text(s) => s.clone(),
                    Cell::Null => "-".into(),
                })
                .collect()
        })
        .collect();
    let widths: Vec<usize> = (0..table.columns.len())
        .map(|j| cells.iter().map(|r| r[j].len()).chain([table.columns[j].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let line = |out: &mut String, row: &[String]| {
        let parts: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  "));
    };
    line(&mut out, &table.columns);
    for r in &cells {
        line(&mut out, r);
    }
    out
}
