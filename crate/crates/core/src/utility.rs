//! Bounded utility functions over fixed-horizon histories.

use crate::alphabet::Symbol;
use crate::history::History;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UtilityError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("table value {0} outside [0, 1]")]
    TableValueOutOfRange(f64),
    #[error("history length {got} does not match horizon (need {want} symbols)")]
    WrongLength { got: usize, want: usize },
}

/// How the utility maps a complete `2m`-symbol history into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilityKind {
    /// Fraction of actions equal to the given symbol.
    MeanActionMatches(Symbol),
    /// Fraction of observations equal to the given symbol.
    MeanObservationMatches(Symbol),
    /// Mean of a per-action reward row (`reward[a_t]`, each in [0, 1]).
    ActionReward(Vec<f64>),
    /// Mean of a per-observation reward row; the paper's reward-sum form.
    ObservationReward(Vec<f64>),
    /// Explicit values on full histories; absent entries score 0.
    PathTable(HashMap<Vec<Symbol>, f64>),
}

/// A utility `U_m : X^{2m} -> [0, 1]` over `m`-timestep histories.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityFunction {
    horizon: usize,
    kind: UtilityKind,
}

impl UtilityFunction {
    pub fn new(horizon: usize, kind: UtilityKind) -> Result<Self, UtilityError> {
        if horizon == 0 {
            return Err(UtilityError::ZeroHorizon);
        }
        match &kind {
            UtilityKind::ActionReward(row) | UtilityKind::ObservationReward(row) => {
                for &r in row {
                    if !(0.0..=1.0).contains(&r) {
                        return Err(UtilityError::RewardOutOfRange(r));
                    }
                }
            }
            UtilityKind::PathTable(table) => {
                for &v in table.values() {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(UtilityError::TableValueOutOfRange(v));
                    }
                }
            }
            _ => {}
        }
        Ok(UtilityFunction { horizon, kind })
    }

    /// Horizon `m` in timesteps; complete histories have `2m` symbols.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn kind(&self) -> &UtilityKind {
        &self.kind
    }

    /// Evaluate on a complete history of exactly `2m` symbols.
    pub fn eval(&self, h: &History) -> Result<f64, UtilityError> {
        if h.len() != 2 * self.horizon {
            return Err(UtilityError::WrongLength {
                got: h.len(),
                want: 2 * self.horizon,
            });
        }
        let m = self.horizon as f64;
        let u = match &self.kind {
            UtilityKind::MeanActionMatches(s) => {
                h.actions().filter(|a| a == s).count() as f64 / m
            }
            UtilityKind::MeanObservationMatches(s) => {
                h.observations().filter(|o| o == s).count() as f64 / m
            }
            UtilityKind::ActionReward(row) => {
                h.actions().map(|a| row[a as usize]).sum::<f64>() / m
            }
            UtilityKind::ObservationReward(row) => {
                h.observations().map(|o| row[o as usize]).sum::<f64>() / m
            }
            UtilityKind::PathTable(table) => *table.get(h.symbols()).unwrap_or(&0.0),
        };
        debug_assert!((0.0..=1.0 + 1e-12).contains(&u));
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_sum_form_is_normalized_mean() {
        let u = UtilityFunction::new(2, UtilityKind::ObservationReward(vec![0.0, 1.0])).unwrap();
        assert_eq!(u.eval(&History::from([0, 1, 0, 0])).unwrap(), 0.5);
        assert_eq!(u.eval(&History::from([1, 1, 1, 1])).unwrap(), 1.0);
    }

    #[test]
    fn rejects_wrong_length_and_bad_rewards() {
        let u = UtilityFunction::new(2, UtilityKind::MeanActionMatches(1)).unwrap();
        assert!(u.eval(&History::from([0, 1])).is_err());
        assert!(UtilityFunction::new(1, UtilityKind::ActionReward(vec![0.0, 1.5])).is_err());
    }

    #[test]
    fn path_table_defaults_to_zero() {
        let mut t = HashMap::new();
        t.insert(vec![1, 0], 0.75);
        let u = UtilityFunction::new(1, UtilityKind::PathTable(t)).unwrap();
        assert_eq!(u.eval(&History::from([1, 0])).unwrap(), 0.75);
        assert_eq!(u.eval(&History::from([0, 0])).unwrap(), 0.0);
    }
}
