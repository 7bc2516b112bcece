//! Series tables and report files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::Config;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Column-named rows of doubles.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Array of objects; non-finite values become `null`.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let object: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), json!(v)))
                        .collect();
                    Value::Object(object)
                })
                .collect(),
        )
    }
}

/// Result of one scenario before it is written out.
pub struct Outcome {
    pub series: Table,
    pub results: Value,
    /// Set when a self-check of the scenario failed; the files are still written.
    pub gate_failure: Option<String>,
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    scenario: &'a str,
    kind: &'static str,
    params_fingerprint: String,
    config: &'a Config,
    series: Value,
    results: &'a Value,
}

/// Writes `<name>.<csv|json>` and `<name>.report.json` into `dir` and
/// returns both paths.
pub fn write_outputs(
    dir: &Path,
    config: &Config,
    kind: &'static str,
    outcome: &Outcome,
    format: Format,
) -> anyhow::Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let name = &config.scenario.name;
    let series_name = format!("{name}.{}", format.extension());
    let series_path = dir.join(&series_name);
    let mut buf = Vec::new();
    match format {
        Format::Csv => outcome.series.write_csv(&mut buf)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &outcome.series.to_json())?;
            buf.push(b'\n');
        }
    }
    fs::write(&series_path, buf).with_context(|| format!("cannot write {}", series_path.display()))?;

    let report = Report {
        schema_version: REPORT_SCHEMA,
        tool: "opencomp",
        version: env!("CARGO_PKG_VERSION"),
        scenario: name,
        kind,
        params_fingerprint: config.params.params().fingerprint(),
        config,
        series: json!({
            "file": series_name,
            "columns": outcome.series.columns,
            "rows": outcome.series.rows.len(),
        }),
        results: &outcome.results,
    };
    let report_path = dir.join(format!("{name}.report.json"));
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(&report_path, text).with_context(|| format!("cannot write {}", report_path.display()))?;
    Ok((series_path, report_path))
}
