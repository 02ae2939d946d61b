//! Executes a scenario and writes its outputs.
//!
//! Layout per run: `<out>/<scenario-name>/` holding one CSV per table,
//! one SVG per plot, and `summary.json`. Files are written to a
//! temporary name and renamed into place, so partially-written outputs
//! never appear under their final names.

use crate::builtins::{self, ExperimentError};
use crate::report::RunSummary;
use crate::scenario::{Scenario, ScenarioError};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("writing outputs: {0}")]
    Io(#[from] std::io::Error),
    #[error("serializing summary: {0}")]
    Json(#[from] serde_json::Error),
}

/// What a run produced, and where.
pub struct RunOutcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    /// Violated theorem-level assertions (exit code 2 when nonempty).
    pub violations: Vec<String>,
}

pub fn run(scenario: &Scenario, out_root: &Path) -> Result<RunOutcome, RunError> {
    let output = builtins::run_experiment(&scenario.experiment)?;
    let dir = out_root.join(&scenario.name);
    fs::create_dir_all(&dir)?;

    let mut files = Vec::new();
    let mut tables = Vec::new();
    for table in &output.tables {
        let name = format!("{}.csv", table.name);
        write_atomic(&dir, &name, table.to_csv().as_bytes())?;
        tables.push(name.clone());
        files.push(name);
    }
    let mut plots = Vec::new();
    for plot in &output.plots {
        let name = format!("{}.svg", plot.name);
        write_atomic(&dir, &name, plot.svg.as_bytes())?;
        plots.push(name.clone());
        files.push(name);
    }
    let summary = RunSummary {
        scenario: &scenario.name,
        version: env!("CARGO_PKG_VERSION"),
        records: &output.records,
        violations: &output.violations,
        tables,
        plots,
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    write_atomic(&dir, "summary.json", json.as_bytes())?;
    files.push("summary.json".into());

    Ok(RunOutcome {
        dir,
        files,
        violations: output.violations,
    })
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), std::io::Error> {
    let tmp = dir.join(format!(".tmp.{name}"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, dir.join(name))
}
