//! CSV and JSON emission. Every file opens with the schema version and the
//! effective configuration so that a table can be traced back to its run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Output directory plus the header shared by all files of one run.
pub struct Report {
    dir: PathBuf,
    command: String,
    config: BTreeMap<String, String>,
    written: Vec<PathBuf>,
}

/// Rows of one CSV table, cells already formatted.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip formatting, empty for a missing value.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl Report {
    pub fn new(dir: &Path, command: &str, config: BTreeMap<String, String>) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Report { dir: dir.to_path_buf(), command: command.to_string(), config, written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        let mut out = format!("# robin-spectra {} schema {SCHEMA_VERSION}\n", self.command);
        for (k, v) in &self.config {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        out.push_str(
            std::str::from_utf8(&w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?).unwrap_or_default(),
        );
        self.save(name, out)
    }

    pub fn write_json(&mut self, name: &str, body: Value) -> Result<(), CliError> {
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": self.config,
            "result": body,
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.save(name, text)
    }

    fn save(&mut self, name: &str, text: String) -> Result<(), CliError> {
        let path = self.path(name);
        std::fs::write(&path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    /// Registers a file written by other means.
    pub fn record(&mut self, path: PathBuf) {
        self.written.push(path);
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
