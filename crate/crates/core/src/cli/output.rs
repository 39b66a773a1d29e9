use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A rectangular table rendered as CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let line = |out: &mut String, cells: &[String]| {
            let quoted: Vec<String> = cells.iter().map(|c| quote(c)).collect();
            let _ = writeln!(out, "{}", quoted.join(","));
        };
        line(&mut out, &self.header);
        for row in &self.rows {
            line(&mut out, row);
        }
        out
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Everything a command produces.
#[derive(Debug, Clone)]
pub struct Report {
    pub summary: Value,
    pub table: Table,
    /// File name used for the table when writing to a directory.
    pub table_name: &'static str,
    /// Description of the first failed check, if any.
    pub failure: Option<String>,
}

impl Report {
    pub fn new(summary: impl Serialize, table: Table, table_name: &'static str) -> Result<Self, CliError> {
        let summary = serde_json::to_value(summary).map_err(|e| CliError::Output(e.to_string()))?;
        Ok(Self { summary, table, table_name, failure: None })
    }

    pub fn fail_unless(mut self, ok: bool, what: &str) -> Self {
        if !ok && self.failure.is_none() {
            self.failure = Some(what.to_string());
        }
        self
    }
}

fn summary_text(summary: &Value) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(summary).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes `contents` to `dir/name` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let io = |e: std::io::Error| CliError::Io { path: dir.to_path_buf(), source: e };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    let target = dir.join(name);
    tmp.persist(&target).map_err(|e| CliError::Io { path: target.clone(), source: e.error })?;
    Ok(target)
}

/// Prints the report, or writes `summary.json` and the table into `dir`.
pub fn emit(report: &Report, out: Option<&Path>, format: Format) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })?;
            write_atomic(dir, "summary.json", &summary_text(&report.summary)?)?;
            write_atomic(dir, report.table_name, &report.table.to_csv())?;
        }
        None => match format {
            Format::Json => print!("{}", summary_text(&report.summary)?),
            Format::Csv => print!("{}", report.table.to_csv()),
        },
    }
    Ok(())
}
