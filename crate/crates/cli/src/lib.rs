//! Scenario runner for the KL-constrained imitation laboratory.
//!
//! Every experiment is a named, seeded scenario producing tabular records
//! (CSV), a summary (JSON), and optional SVG plots. Built-in scenarios
//! each assert at least one theorem-level property; a violated assertion
//! is a nonzero exit, never a log line.

pub mod builtins;
pub mod plot;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod suites;
