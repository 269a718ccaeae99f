use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::args::Format;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Rows of a CSV table, already formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| num(*v)).collect());
    }

    fn write_to(&self, w: impl Write) -> CliResult<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush().map_err(|e| CliError::Csv(e.into()))?;
        Ok(())
    }
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Result of one command: a JSON report, a table, and whether every
/// numerical check passed.
#[derive(Debug)]
pub struct Outcome {
    pub report: Map<String, Value>,
    pub table: Table,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn new(command: &str, table: Table) -> Self {
        let mut report = Map::new();
        report.insert("schema_version".into(), SCHEMA_VERSION.into());
        report.insert("command".into(), command.into());
        Self { report, table, failures: Vec::new() }
    }

    pub fn set(&mut self, key: &str, value: impl serde::Serialize) -> CliResult<()> {
        let v = serde_json::to_value(value)
            .map_err(|source| CliError::Json { context: format!("serializing {key}"), source })?;
        self.report.insert(key.into(), v);
        Ok(())
    }

    /// Records a failed check; the run still emits its output.
    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn emit(mut self, format: Format, out: Option<&Path>, stdout: &mut impl Write) -> CliResult<Vec<String>> {
        self.report.insert("passed".into(), self.failures.is_empty().into());
        self.report.insert("failures".into(), self.failures.clone().into());
        if let Some(path) = out {
            let file = File::create(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
            self.table.write_to(file)?;
        }
        let io = |source| CliError::Io { path: "<stdout>".into(), source };
        match format {
            Format::Json => {
                let text = serde_json::to_string_pretty(&Value::Object(self.report))
                    .map_err(|source| CliError::Json { context: "serializing report".into(), source })?;
                writeln!(stdout, "{text}").map_err(io)?;
            }
            Format::Csv if out.is_none() => self.table.write_to(&mut *stdout)?,
            Format::Csv => {}
        }
        stdout.flush().map_err(io)?;
        Ok(self.failures)
    }
}
