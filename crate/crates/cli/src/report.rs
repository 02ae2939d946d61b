//! Records, tables, and their on-disk formats.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! given scenario and seed produce byte-identical files on every run.

use serde::Serialize;

/// One measured number, with units so nothing is ambiguous downstream.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub experiment: String,
    pub name: String,
    pub value: f64,
    pub units: String,
}

impl Record {
    pub fn new(
        experiment: impl Into<String>,
        name: impl Into<String>,
        value: f64,
        units: impl Into<String>,
    ) -> Self {
        Record {
            experiment: experiment.into(),
            name: name.into(),
            value,
            units: units.into(),
        }
    }
}

/// A named CSV table.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip float formatting (`inf` for infinities).
pub fn fmt(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x}")
    }
}

/// A named SVG plot.
#[derive(Debug, Clone)]
pub struct Plot {
    pub name: String,
    pub svg: String,
}

/// Everything a scenario produced.
#[derive(Debug, Default)]
pub struct ScenarioOutput {
    pub records: Vec<Record>,
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
    /// Violated theorem-level assertions; nonempty means exit code 2.
    pub violations: Vec<String>,
}

impl ScenarioOutput {
    pub fn record(
        &mut self,
        experiment: impl Into<String>,
        name: impl Into<String>,
        value: f64,
        units: impl Into<String>,
    ) {
        self.records.push(Record::new(experiment, name, value, units));
    }

    pub fn check(&mut self, ok: bool, message: impl Into<String>) {
        if !ok {
            self.violations.push(message.into());
        }
    }
}

/// The summary written next to the tables.
#[derive(Debug, Serialize)]
pub struct RunSummary<'a> {
    pub scenario: &'a str,
    pub version: &'a str,
    pub records: &'a [Record],
    pub violations: &'a [String],
    pub tables: Vec<String>,
    pub plots: Vec<String>,
}
