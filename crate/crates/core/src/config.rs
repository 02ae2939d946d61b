//! Declarative specs for models, events, and utilities.
//!
//! These mirror the runtime types one-to-one but are plain data, so
//! scenario files can carry model classes (kind, parameters, optional
//! encoding-based prior) in ordinary structured text.

use crate::alphabet::{Alphabet, Symbol};
use crate::event::Event;
use crate::mixture::{MixtureError, ModelClass};
use crate::semidist::{FsmState, Predictor, PredictorError, SemiDistribution, WeightRow};
use crate::utility::{UtilityError, UtilityFunction, UtilityKind};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("bad predictor spec: {0}")]
    Predictor(#[from] PredictorError),
    #[error("bad utility spec: {0}")]
    Utility(#[from] UtilityError),
    #[error("bad model class: {0}")]
    Mixture(#[from] MixtureError),
    #[error("model priors must be given for all models or for none")]
    MixedPriors,
    #[error("fsm state {state} lists {got} transitions, alphabet needs {want}")]
    FsmTransitions { state: usize, got: usize, want: usize },
}

/// A predictor, as data.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Uniform,
    Constant { symbol: Symbol },
    Bernoulli { p: f64 },
    Iid { weights: Vec<u8>, halt: u8 },
    Parity {
        action_weights: Vec<u8>,
        action_halt: u8,
        observation_weights: Vec<u8>,
        observation_halt: u8,
    },
    Table {
        depth: usize,
        rows: Vec<Vec<u8>>,
        halts: Vec<u8>,
    },
    Fsm {
        start: u8,
        emissions: Vec<Vec<u8>>,
        emission_halts: Vec<u8>,
        transitions: Vec<Vec<u8>>,
    },
    FloatIid { probs: Vec<f64> },
    FloatParity {
        action: Vec<f64>,
        observation: Vec<f64>,
    },
}

impl ModelSpec {
    pub fn build(&self, alphabet: Alphabet) -> Result<Predictor, SpecError> {
        Ok(match self {
            ModelSpec::Uniform => Predictor::Uniform { alphabet },
            ModelSpec::Constant { symbol } => Predictor::Constant {
                alphabet,
                symbol: *symbol,
            },
            ModelSpec::Bernoulli { p } => Predictor::bernoulli(*p)?,
            ModelSpec::Iid { weights, halt } => {
                Predictor::iid(alphabet, WeightRow::new(weights.clone(), *halt))?
            }
            ModelSpec::Parity {
                action_weights,
                action_halt,
                observation_weights,
                observation_halt,
            } => Predictor::parity_iid(
                alphabet,
                WeightRow::new(action_weights.clone(), *action_halt),
                WeightRow::new(observation_weights.clone(), *observation_halt),
            )?,
            ModelSpec::Table { depth, rows, halts } => {
                let rows = rows
                    .iter()
                    .zip(halts)
                    .map(|(w, &h)| WeightRow::new(w.clone(), h))
                    .collect();
                Predictor::context_table(alphabet, *depth, rows)?
            }
            ModelSpec::Fsm {
                start,
                emissions,
                emission_halts,
                transitions,
            } => {
                let mut states = Vec::with_capacity(emissions.len());
                for (i, ((w, &h), next)) in emissions
                    .iter()
                    .zip(emission_halts)
                    .zip(transitions)
                    .enumerate()
                {
                    if next.len() != alphabet.size() {
                        return Err(SpecError::FsmTransitions {
                            state: i,
                            got: next.len(),
                            want: alphabet.size(),
                        });
                    }
                    states.push(FsmState {
                        emission: WeightRow::new(w.clone(), h),
                        next: next.clone(),
                    });
                }
                Predictor::fsm(alphabet, *start, states)?
            }
            ModelSpec::FloatIid { probs } => Predictor::float_iid(alphabet, probs.clone())?,
            ModelSpec::FloatParity {
                action,
                observation,
            } => Predictor::float_parity(alphabet, action.clone(), observation.clone())?,
        })
    }
}

/// One model-class member: label, spec, optional explicit prior weight.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClassMemberSpec {
    pub label: String,
    #[serde(flatten)]
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<f64>,
}

/// Build a model class: explicit weights when every member carries one,
/// the Kraft prior `2^{-ℓ}` when none does.
pub fn build_class(
    alphabet: Alphabet,
    members: &[ClassMemberSpec],
) -> Result<Arc<ModelClass>, SpecError> {
    let with_prior = members.iter().filter(|m| m.prior.is_some()).count();
    if with_prior != 0 && with_prior != members.len() {
        return Err(SpecError::MixedPriors);
    }
    let class = if with_prior == members.len() && !members.is_empty() {
        let mut entries: Vec<(String, Arc<dyn SemiDistribution>, f64)> = Vec::new();
        for m in members {
            entries.push((
                m.label.clone(),
                Arc::new(m.model.build(alphabet)?),
                m.prior.unwrap(),
            ));
        }
        ModelClass::from_weights(alphabet, entries)?
    } else {
        let mut entries = Vec::new();
        for m in members {
            entries.push((m.label.clone(), m.model.build(alphabet)?));
        }
        ModelClass::from_predictors(alphabet, entries)?
    };
    Ok(Arc::new(class))
}

/// An event predicate, as data.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventSpec {
    LengthAtLeast { n: u64 },
    LastObsEquals { symbol: Symbol },
    AnyObsEquals { symbol: Symbol },
    Always,
    Never,
}

impl EventSpec {
    pub fn build(&self) -> Event {
        match self {
            EventSpec::LengthAtLeast { n } => Event::length_at_least(*n),
            EventSpec::LastObsEquals { symbol } => Event::last_obs_equals(*symbol),
            EventSpec::AnyObsEquals { symbol } => Event::any_obs_equals(*symbol),
            EventSpec::Always => Event::always(),
            EventSpec::Never => Event::never(),
        }
    }
}

/// A utility function, as data.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilitySpec {
    MeanActionMatches { symbol: Symbol },
    MeanObservationMatches { symbol: Symbol },
    ActionReward { rewards: Vec<f64> },
    ObservationReward { rewards: Vec<f64> },
}

impl UtilitySpec {
    pub fn build(&self, horizon: usize) -> Result<UtilityFunction, SpecError> {
        let kind = match self {
            UtilitySpec::MeanActionMatches { symbol } => UtilityKind::MeanActionMatches(*symbol),
            UtilitySpec::MeanObservationMatches { symbol } => {
                UtilityKind::MeanObservationMatches(*symbol)
            }
            UtilitySpec::ActionReward { rewards } => UtilityKind::ActionReward(rewards.clone()),
            UtilitySpec::ObservationReward { rewards } => {
                UtilityKind::ObservationReward(rewards.clone())
            }
        };
        Ok(UtilityFunction::new(horizon, kind)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::History;

    #[test]
    fn specs_build_and_serialize() {
        let a = Alphabet::binary();
        let spec = ModelSpec::Iid {
            weights: vec![3, 1],
            halt: 0,
        };
        let p = spec.build(a).unwrap();
        assert_eq!(p.prob(&History::empty(), 0), 0.75);
        let text = toml::to_string(&spec).unwrap();
        let back: ModelSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn class_prior_modes() {
        let a = Alphabet::binary();
        let all_priors = vec![
            ClassMemberSpec {
                label: "x".into(),
                model: ModelSpec::Bernoulli { p: 0.3 },
                prior: Some(0.75),
            },
            ClassMemberSpec {
                label: "y".into(),
                model: ModelSpec::Uniform,
                prior: Some(0.25),
            },
        ];
        let class = build_class(a, &all_priors).unwrap();
        assert!((class.prior()[0] - 0.75).abs() < 1e-12);

        let kraft = vec![
            ClassMemberSpec {
                label: "u".into(),
                model: ModelSpec::Uniform,
                prior: None,
            },
            ClassMemberSpec {
                label: "c".into(),
                model: ModelSpec::Constant { symbol: 1 },
                prior: None,
            },
        ];
        let class = build_class(a, &kraft).unwrap();
        // uniform encodes in 3 bits, constant in 6: prior ratio 8:1
        let pr = class.prior();
        assert!((pr[0] / pr[1] - 8.0).abs() < 1e-9);

        let mixed = vec![
            ClassMemberSpec {
                label: "u".into(),
                model: ModelSpec::Uniform,
                prior: Some(0.5),
            },
            ClassMemberSpec {
                label: "c".into(),
                model: ModelSpec::Constant { symbol: 1 },
                prior: None,
            },
        ];
        assert!(matches!(
            build_class(a, &mixed),
            Err(SpecError::MixedPriors)
        ));
    }
}
