//! Scenario definitions: the built-in registry and the TOML file format.
//!
//! A scenario file names an experiment and its parameters:
//!
//! ```toml
//! name = "my-sweep"
//! experiment = "budget-sweep"
//! seed = 11
//! budgets = [0.0, 0.25, 0.5]
//! ```
//!
//! Built-ins run with defaults; `--set key=value` patches any field.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario or file: {0}")]
    Unknown(String),
    #[error("scenario file did not parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("override `{key}` did not apply: {reason}")]
    BadOverride { key: String, reason: String },
    #[error("reading scenario file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(flatten)]
    pub experiment: ExperimentSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentSpec {
    /// The KL triangle-inequality failure, at a configurable epsilon.
    NoTriangle {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    /// Generated switch-policy scenarios: measured lifetime KL against
    /// the wrapper-overhead bound, plus prefix-length invariance.
    SwitchBound {
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default = "default_count")]
        count: usize,
        /// Trigger-free training-prefix lengths compared per scenario.
        #[serde(default = "default_prefixes")]
        prefix_steps: Vec<usize>,
    },
    /// TVD-constrained optimization: only V-optimal actions gain mass.
    TvdPathology {
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default = "default_count")]
        count: usize,
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
    /// Demonstrator retention in the top set over sampled histories.
    PessimistRetention {
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default = "default_delta")]
        delta: f64,
        /// `alpha = alpha_fraction * w(mu)`.
        #[serde(default = "default_alpha_fraction")]
        alpha_fraction: f64,
        #[serde(default = "default_histories")]
        histories: usize,
        #[serde(default = "default_history_length")]
        history_length: usize,
    },
    /// Pointwise containment of the pessimistic imitator under the
    /// demonstrator, and the induced KL ordering over random policies.
    PessimistContainment {
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default = "default_containment_count")]
        count: usize,
        #[serde(default = "default_policies")]
        policies_per_scenario: usize,
    },
    /// Certified KL-budgeted optimization across a budget sweep.
    BudgetSweep {
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default = "default_budgets")]
        budgets: Vec<f64>,
        /// Replaces the sweep with a single budget when set.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        budget: Option<f64>,
    },
    /// Per-step KL spending of the canonical switch policy along a
    /// realized trajectory.
    BudgetSpendProfile {
        #[serde(default = "default_profile_seed")]
        seed: u64,
        #[serde(default = "default_profile_horizon")]
        horizon: usize,
    },
    /// Kraft accounting of the toy language.
    KraftAudit {
        #[serde(default = "default_alphabet")]
        alphabet: usize,
    },
    /// Complexity staircase of the simplest not-yet-occurred event.
    SimplestEventScan {
        /// Scan events up to `2^t_max_log2`.
        #[serde(default = "default_tmax_log2")]
        t_max_log2: u32,
        /// Verify the power-of-two dip for all `t <= 2^check_to_log2`.
        #[serde(default = "default_check_log2")]
        check_to_log2: u32,
    },
}

fn default_epsilon() -> f64 {
    0.1
}
fn default_seed() -> u64 {
    2024
}
fn default_count() -> usize {
    20
}
fn default_prefixes() -> Vec<usize> {
    vec![2, 20]
}
fn default_resolution() -> usize {
    100
}
fn default_delta() -> f64 {
    0.1
}
fn default_alpha_fraction() -> f64 {
    0.05
}
fn default_histories() -> usize {
    1000
}
fn default_history_length() -> usize {
    50
}
fn default_containment_count() -> usize {
    10
}
fn default_policies() -> usize {
    50
}
fn default_budgets() -> Vec<f64> {
    vec![0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 3.5]
}
fn default_profile_horizon() -> usize {
    8
}
fn default_profile_seed() -> u64 {
    42
}
fn default_alphabet() -> usize {
    2
}
fn default_tmax_log2() -> u32 {
    21
}
fn default_check_log2() -> u32 {
    20
}

/// Names of the built-in scenarios, in listing order.
pub const BUILTINS: &[&str] = &[
    "no-triangle",
    "switch-bound",
    "tvd-pathology",
    "pessimist-retention",
    "pessimist-containment",
    "budget-sweep",
    "budget-spend-profile",
    "kraft-audit",
    "simplest-event-scan",
];

/// One-line description per built-in, for `list`.
pub fn describe(name: &str) -> &'static str {
    match name {
        "no-triangle" => "KL has no triangle inequality: KL(pi||beta), KL(tau||beta) small, KL(pi||tau) infinite",
        "switch-bound" => "switch policies against augmented mixtures stay under the wrapper-overhead KL bound",
        "tvd-pathology" => "TVD-constrained optimizers only raise the probability of V-optimal actions",
        "pessimist-retention" => "the demonstrator stays in the top set with the promised frequency",
        "pessimist-containment" => "the pessimistic imitator lower-bounds the demonstrator, tightening the KL constraint",
        "budget-sweep" => "certified KL-budgeted optimization: value vs budget, feasibility and monotonicity",
        "budget-spend-profile" => "the switch policy spends its KL budget up front, at the trigger step",
        "kraft-audit" => "the toy language is prefix-free and complete: codeword weights sum to exactly 1",
        "simplest-event-scan" => "description length of the simplest unprecedented event, with power-of-two dips",
        _ => "",
    }
}

/// A built-in scenario with default parameters.
pub fn builtin(name: &str) -> Option<Scenario> {
    let text = format!("name = \"{name}\"\nexperiment = \"{name}\"\n");
    toml::from_str(&text).ok()
}

/// Load a scenario by built-in name or TOML file path, applying
/// `key=value` overrides.
pub fn load(spec: &str, overrides: &[(String, String)]) -> Result<Scenario, ScenarioError> {
    let mut value: toml::Value = if let Some(s) = builtin(spec) {
        toml::Value::try_from(&s).expect("builtin scenarios serialize")
    } else if std::path::Path::new(spec).exists() {
        let text = std::fs::read_to_string(spec)?;
        text.parse::<toml::Value>()?
    } else {
        return Err(ScenarioError::Unknown(spec.to_string()));
    };

    let table = value
        .as_table_mut()
        .ok_or_else(|| ScenarioError::Unknown(spec.to_string()))?;
    for (key, raw) in overrides {
        table.insert(key.clone(), parse_override(raw));
    }
    let scenario: Scenario = value.try_into().map_err(|e: toml::de::Error| {
        ScenarioError::BadOverride {
            key: overrides
                .last()
                .map(|(k, _)| k.clone())
                .unwrap_or_else(|| "scenario".into()),
            reason: e.to_string(),
        }
    })?;
    Ok(scenario)
}

/// Interpret an override literal: integer, float, bool, array, or string.
fn parse_override(raw: &str) -> toml::Value {
    if let Ok(v) = raw.parse::<i64>() {
        return toml::Value::Integer(v);
    }
    if let Ok(v) = raw.parse::<f64>() {
        return toml::Value::Float(v);
    }
    if let Ok(v) = raw.parse::<bool>() {
        return toml::Value::Boolean(v);
    }
    if raw.starts_with('[') {
        if let Ok(v) = format!("x = {raw}").parse::<toml::Value>() {
            if let Some(inner) = v.get("x") {
                return inner.clone();
            }
        }
    }
    toml::Value::String(raw.to_string())
}
