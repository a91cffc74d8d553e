//! Rectangular numeric result tables with embedded metadata, exported as CSV
//! or JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;

/// A rectangular numeric table plus provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    /// Ordered metadata (config hash, seed, tool version, experiment name,
    /// plus experiment-specific scalars).
    pub metadata: BTreeMap<String, String>,
}

/// Export format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// `#`-prefixed metadata lines, a header row, `.` decimal separator,
    /// `\n` line endings, 17 significant digits.
    Csv,
    /// Object with `metadata`, `columns`, and `rows` keys; numbers are
    /// emitted with shortest round-trip encoding.
    Json,
}

impl ResultTable {
    /// Creates an empty table with the given column names.
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    /// Column names.
    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    /// Row data.
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Appends a row; panics if the width disagrees with the header (that is
    /// a programming error in an experiment, not a user input problem).
    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the column count"
        );
        self.rows.push(row);
    }

    /// Inserts a metadata entry.
    pub fn meta(&mut self, key: &str, value: impl Into<String>) {
        self.metadata.insert(key.to_string(), value.into());
    }

    /// Serializes the table into the given format.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            writeln!(out, "# {k} = {v}").unwrap();
        }
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }

    fn render_json(&self) -> String {
        let mut doc = serde_json::Map::new();
        doc.insert(
            "metadata".into(),
            serde_json::to_value(&self.metadata).unwrap(),
        );
        doc.insert("columns".into(), serde_json::to_value(&self.columns).unwrap());
        doc.insert("rows".into(), serde_json::to_value(&self.rows).unwrap());
        let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(doc)).unwrap();
        s.push('\n');
        s
    }
}
