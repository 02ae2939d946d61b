//! Exactly-computable laboratory for KL-constrained imitation.
//!
//! Everything here operates on finite alphabets, finite horizons, and finite
//! model classes, so that quantities which are merely *defined* in the
//! algorithmic-information-theory setting — Bayes mixtures over competing
//! predictors, lifetime KL and total-variation divergences between policies,
//! description lengths under a prefix-free code, pessimistic ensemble
//! imitators — become numbers a test can assert on.
//!
//! Module map:
//!
//! - [`alphabet`], [`history`]: interleaved action/observation sequences.
//! - [`semidist`]: probability semi-distributions (per-context mass ≤ 1) and
//!   the concrete predictor families used as models and policies.
//! - [`utility`]: bounded utility functions over fixed-horizon histories.
//! - [`event`]: decidable history predicates ("happens", "unprecedented").
//! - [`toylang`]: a complete prefix-free binary language whose codeword
//!   lengths stand in for Kolmogorov complexity.
//! - [`mixture`]: finite Bayes mixtures with split action/observation
//!   posteriors and the switch-variant class augmentation.
//! - [`planning`]: exact finite-horizon expectimax.
//! - [`divergence`]: per-step and lifetime KL, expected lifetime KL, and
//!   lifetime total variation distance.
//! - [`optimizers`]: KL-budgeted and TVD-budgeted policy optimization plus
//!   the switch-policy bound experiment.
//! - [`pessimist`]: top sets, the min-over-top-set imitator, containment
//!   and retention experiments.
//! - [`mixer`]: the differentiable fixed-KL mixing operation with a
//!   per-episode budget ledger.

pub mod alphabet;
pub mod config;
pub mod divergence;
pub mod event;
pub mod history;
pub mod mixer;
pub mod mixture;
pub mod optimizers;
pub mod pessimist;
pub mod planning;
pub mod sampling;
pub mod semidist;
pub mod toylang;
pub mod utility;

pub use alphabet::{Alphabet, Parity, Symbol};
pub use history::History;
pub use semidist::{joint_probability, Predictor, SemiDistribution, WeightRow};
