//! Finite Bayesian mixtures with split action/observation posteriors.
//!
//! A model class is a finite set of semi-distributions with positive prior
//! weights. Conditioning maintains two log-likelihood ledgers per model —
//! one over action positions, one over observation positions — so three
//! posteriors are available: the action-stream posterior `w_a` (actions
//! only), the observation-stream posterior `w_o`, and the joint posterior
//! (both). The mixture predictor uses `w_a` when predicting an action and
//! `w_o` when predicting an observation; this is what makes the
//! probability of a whole action block under the mixture equal the
//! `w_a`-weighted sum of per-model block probabilities, the identity the
//! switch-variant argument rests on.
//!
//! Class augmentation: for a trigger event `E` and a post policy `π`,
//! every model `ν` gains a variant `ν'` that mimics `ν` until `E` has
//! happened and answers action queries with `π` afterwards. The variant's
//! prior is `2^{-Δ}` times the original, where `Δ` is the measured extra
//! description length of the wrapper program, so the prior ratio — and,
//! on trigger-free histories, the posterior ratio — is exactly `2^{-Δ}`.

use crate::alphabet::{Alphabet, Parity, Symbol};
use crate::event::Event;
use crate::history::History;
use crate::semidist::{Predictor, SemiDistribution};
use crate::toylang::{self, DecodedObject, EncodeError, ProgramString};
use std::sync::Arc;
use thiserror::Error;

pub const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Error)]
pub enum MixtureError {
    #[error("model class must not be empty")]
    EmptyClass,
    #[error("prior weight {weight} for model {index} not positive and finite")]
    BadPrior { index: usize, weight: f64 },
    #[error("model {index} uses alphabet size {got}, class uses {want}")]
    AlphabetMismatch { index: usize, got: usize, want: usize },
    #[error("symbol {symbol} outside class alphabet")]
    SymbolOutOfRange { symbol: Symbol },
    #[error(
        "degenerate posterior: every {stream} model assigns probability 0 to symbol {symbol} at position {position}"
    )]
    DegeneratePosterior {
        stream: &'static str,
        symbol: Symbol,
        position: usize,
    },
    #[error("trigger or post policy not encodable: {0}")]
    Encoding(#[from] EncodeError),
}

/// One member of a model class.
pub struct ModelEntry {
    pub label: String,
    pub model: Arc<dyn SemiDistribution>,
    /// Natural log of the normalized prior weight.
    pub log_prior: f64,
    /// Toy-language source, when the model came from one.
    pub program: Option<ProgramString>,
}

/// A finite model class with normalized prior.
pub struct ModelClass {
    alphabet: Alphabet,
    entries: Vec<ModelEntry>,
}

impl ModelClass {
    /// Build from explicit positive weights; they are normalized to sum 1.
    pub fn from_weights(
        alphabet: Alphabet,
        models: Vec<(String, Arc<dyn SemiDistribution>, f64)>,
    ) -> Result<Self, MixtureError> {
        if models.is_empty() {
            return Err(MixtureError::EmptyClass);
        }
        for (index, (_, m, w)) in models.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return Err(MixtureError::BadPrior {
                    index,
                    weight: *w,
                });
            }
            if m.alphabet().size() != alphabet.size() {
                return Err(MixtureError::AlphabetMismatch {
                    index,
                    got: m.alphabet().size(),
                    want: alphabet.size(),
                });
            }
        }
        let log_total = log_sum_exp(models.iter().map(|(_, _, w)| w.ln()));
        let entries = models
            .into_iter()
            .map(|(label, model, w)| ModelEntry {
                label,
                model,
                log_prior: w.ln() - log_total,
                program: None,
            })
            .collect();
        Ok(ModelClass { alphabet, entries })
    }

    /// Build from encodable predictors with the Kraft prior `2^{-ℓ}`
    /// (normalized over the class).
    pub fn from_predictors(
        alphabet: Alphabet,
        models: Vec<(String, Predictor)>,
    ) -> Result<Self, MixtureError> {
        if models.is_empty() {
            return Err(MixtureError::EmptyClass);
        }
        let mut raw = Vec::with_capacity(models.len());
        for (label, p) in models {
            let program = toylang::encode(&DecodedObject::Predictor(p.clone()), &alphabet)?;
            let log_weight = -(program.len() as f64) * LN_2;
            raw.push((label, p, program, log_weight));
        }
        let log_total = log_sum_exp(raw.iter().map(|(_, _, _, lw)| *lw));
        let entries = raw
            .into_iter()
            .map(|(label, p, program, lw)| ModelEntry {
                label,
                model: Arc::new(p) as Arc<dyn SemiDistribution>,
                log_prior: lw - log_total,
                program: Some(program),
            })
            .collect();
        Ok(ModelClass { alphabet, entries })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ModelEntry] {
        &self.entries
    }

    pub fn prior(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.log_prior.exp()).collect()
    }
}

/// Which likelihood ledger a posterior conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosteriorStream {
    /// Action positions only (`w_a`).
    Action,
    /// Observation positions only (`w_o`).
    Observation,
    /// Both streams — the ordinary Bayesian posterior.
    Joint,
}

/// Posterior state of a model class after conditioning on a history.
///
/// A value type: `update` returns a new state, so concurrent experiments
/// can hold independent copies over one shared class.
#[derive(Clone)]
pub struct ModelClassPosterior {
    class: Arc<ModelClass>,
    history: History,
    log_lik_action: Vec<f64>,
    log_lik_obs: Vec<f64>,
}

impl ModelClassPosterior {
    pub fn new(class: Arc<ModelClass>) -> Self {
        let n = class.len();
        ModelClassPosterior {
            class,
            history: History::empty(),
            log_lik_action: vec![0.0; n],
            log_lik_obs: vec![0.0; n],
        }
    }

    /// Condition a fresh posterior on `h` in one pass.
    pub fn conditioned_on(class: Arc<ModelClass>, h: &History) -> Result<Self, MixtureError> {
        let mut state = ModelClassPosterior::new(class);
        for &s in h.symbols() {
            state = state.update(s)?;
        }
        Ok(state)
    }

    pub fn class(&self) -> &Arc<ModelClass> {
        &self.class
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    /// Absorb the next symbol (parity given by the history length) into
    /// the matching likelihood ledger.
    ///
    /// Errors when every model still alive in that stream assigns the
    /// symbol probability 0 — the degenerate posterior is surfaced, not
    /// silently renormalized.
    pub fn update(&self, symbol: Symbol) -> Result<Self, MixtureError> {
        if !self.class.alphabet.contains(symbol) {
            return Err(MixtureError::SymbolOutOfRange { symbol });
        }
        let parity = self.history.next_parity();
        let mut next = self.clone();
        let mut any_alive = false;
        for (i, entry) in self.class.entries.iter().enumerate() {
            let p = entry.model.prob(&self.history, symbol);
            let ledger = match parity {
                Parity::Action => &mut next.log_lik_action,
                Parity::Observation => &mut next.log_lik_obs,
            };
            let alive_before = match parity {
                Parity::Action => self.log_lik_action[i] > f64::NEG_INFINITY,
                Parity::Observation => self.log_lik_obs[i] > f64::NEG_INFINITY,
            };
            if p > 0.0 {
                ledger[i] += p.ln();
                if alive_before {
                    any_alive = true;
                }
            } else {
                ledger[i] = f64::NEG_INFINITY;
            }
        }
        if !any_alive {
            return Err(MixtureError::DegeneratePosterior {
                stream: match parity {
                    Parity::Action => "action-stream",
                    Parity::Observation => "observation-stream",
                },
                symbol,
                position: self.history.len(),
            });
        }
        next.history = self.history.child(symbol);
        Ok(next)
    }

    fn log_weights(&self, stream: PosteriorStream) -> Vec<f64> {
        self.class
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                e.log_prior
                    + match stream {
                        PosteriorStream::Action => self.log_lik_action[i],
                        PosteriorStream::Observation => self.log_lik_obs[i],
                        PosteriorStream::Joint => self.log_lik_action[i] + self.log_lik_obs[i],
                    }
            })
            .collect()
    }

    /// Normalized posterior over models for the given stream.
    ///
    /// Errors when all weights vanished (possible for `Joint` even while
    /// both single streams are alive).
    pub fn posterior(&self, stream: PosteriorStream) -> Result<Vec<f64>, MixtureError> {
        let lw = self.log_weights(stream);
        let log_total = log_sum_exp(lw.iter().copied());
        if log_total == f64::NEG_INFINITY {
            return Err(MixtureError::DegeneratePosterior {
                stream: match stream {
                    PosteriorStream::Action => "action-stream",
                    PosteriorStream::Observation => "observation-stream",
                    PosteriorStream::Joint => "joint",
                },
                symbol: 0,
                position: self.history.len(),
            });
        }
        Ok(lw.iter().map(|&w| (w - log_total).exp()).collect())
    }

    /// Posterior log-weight differences are exact in log space; exposed
    /// for the switch-variant ratio invariant.
    pub fn log_posterior_unnormalized(&self, stream: PosteriorStream) -> Vec<f64> {
        self.log_weights(stream)
    }

    /// The Bayes mixture conditional `ξ(x | history)` for the next
    /// position of the given parity, over all symbols.
    ///
    /// Uses the action-stream posterior at action positions and the
    /// observation-stream posterior at observation positions — the agent
    /// setting's split mixture.
    pub fn predict(&self, parity: Parity) -> Result<Vec<f64>, MixtureError> {
        debug_assert_eq!(parity, self.history.next_parity());
        let stream = match parity {
            Parity::Action => PosteriorStream::Action,
            Parity::Observation => PosteriorStream::Observation,
        };
        self.predict_with(stream)
    }

    /// Mixture conditional under an explicit posterior stream. The
    /// `Joint` stream gives the plain single-posterior mixture of the
    /// predictive setting, for which `ξ(x_{<t}) = Σ_ν w(ν) ν(x_{<t})`.
    pub fn predict_with(&self, stream: PosteriorStream) -> Result<Vec<f64>, MixtureError> {
        let weights = self.posterior(stream)?;
        let mut out = vec![0.0; self.class.alphabet.size()];
        for (w, entry) in weights.iter().zip(&self.class.entries) {
            if *w == 0.0 {
                continue;
            }
            for (s, slot) in out.iter_mut().enumerate() {
                *slot += w * entry.model.prob(&self.history, s as Symbol);
            }
        }
        Ok(out)
    }
}

fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

// ---------------------------------------------------------------------------
// The mixture as an environment / base policy
// ---------------------------------------------------------------------------

/// How a [`MixtureDist`] weights its models per query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixtureMode {
    /// Action queries use `w_a`, observation queries `w_o` — the agent
    /// setting.
    SplitStreams,
    /// Every query uses the ordinary joint posterior — the purely
    /// predictive setting.
    Joint,
}

/// The Bayes mixture `ξ` of a model class, usable wherever a
/// semi-distribution is expected (planner environment, KL base).
/// Conditionals are recomputed from the class per query; at desk scale
/// that costs less than caching would.
pub struct MixtureDist {
    class: Arc<ModelClass>,
    mode: MixtureMode,
}

impl MixtureDist {
    /// Split-stream mixture (the agent setting's `ξ`).
    pub fn new(class: Arc<ModelClass>) -> Self {
        MixtureDist {
            class,
            mode: MixtureMode::SplitStreams,
        }
    }

    /// Single-posterior mixture (the predictive setting's `ξ`).
    pub fn joint(class: Arc<ModelClass>) -> Self {
        MixtureDist {
            class,
            mode: MixtureMode::Joint,
        }
    }

    pub fn class(&self) -> &Arc<ModelClass> {
        &self.class
    }
}

impl SemiDistribution for MixtureDist {
    fn prob(&self, history: &History, symbol: Symbol) -> f64 {
        let stream = match self.mode {
            MixtureMode::Joint => PosteriorStream::Joint,
            MixtureMode::SplitStreams => match history.next_parity() {
                Parity::Action => PosteriorStream::Action,
                Parity::Observation => PosteriorStream::Observation,
            },
        };
        match ModelClassPosterior::conditioned_on(self.class.clone(), history) {
            Ok(state) => match state.predict_with(stream) {
                Ok(row) => row[symbol as usize],
                Err(_) => 0.0,
            },
            // a context no model can produce carries no mixture mass
            Err(_) => 0.0,
        }
    }

    fn alphabet(&self) -> Alphabet {
        self.class.alphabet
    }
}

// ---------------------------------------------------------------------------
// Switch variants
// ---------------------------------------------------------------------------

/// A model that mimics `base` until `trigger` has happened in the context
/// and answers action queries with `post` afterwards. Observation queries
/// always go to `base`.
pub struct SwitchModel {
    pub base: Arc<dyn SemiDistribution>,
    pub trigger: Event,
    pub post: Arc<dyn SemiDistribution>,
}

impl SemiDistribution for SwitchModel {
    fn prob(&self, history: &History, symbol: Symbol) -> f64 {
        if history.next_parity() == Parity::Action && self.trigger.has_happened_in(history) {
            self.post.prob(history, symbol)
        } else {
            self.base.prob(history, symbol)
        }
    }

    fn alphabet(&self) -> Alphabet {
        self.base.alphabet()
    }
}

/// A model class augmented with one switch variant per base model.
pub struct AugmentedClass {
    pub class: Arc<ModelClass>,
    /// Wrapper overhead in bits: tag + trigger program + post program.
    pub delta_bits: u64,
    /// Indices of the original models inside the augmented class.
    pub base_indices: Vec<usize>,
    /// Index of each base model's variant.
    pub variant_indices: Vec<usize>,
}

/// Build the augmented class for Theorem-style switch experiments.
///
/// The post policy must be an encodable predictor; its codeword and the
/// trigger's codeword fix the overhead `Δ = 3 + ℓ(trigger) + ℓ(post)`
/// uniformly across base models, and each variant's prior is `2^{-Δ}`
/// times its base's (then everything renormalizes together, preserving
/// the ratio).
pub fn augment_with_switch_variants(
    class: &Arc<ModelClass>,
    trigger: &Event,
    post: &Predictor,
) -> Result<AugmentedClass, MixtureError> {
    let alphabet = class.alphabet;
    let trigger_prog = toylang::encode(&DecodedObject::Event(trigger.clone()), &alphabet)?;
    let post_prog = toylang::encode(&DecodedObject::Predictor(post.clone()), &alphabet)?;
    let delta_bits = 3 + trigger_prog.len() as u64 + post_prog.len() as u64;
    let post_arc: Arc<dyn SemiDistribution> = Arc::new(post.clone());

    let mut raw: Vec<(String, Arc<dyn SemiDistribution>, f64, Option<ProgramString>)> = Vec::new();
    for entry in class.entries() {
        raw.push((
            entry.label.clone(),
            entry.model.clone(),
            entry.log_prior,
            entry.program.clone(),
        ));
    }
    for entry in class.entries() {
        let program = entry
            .program
            .as_ref()
            .map(|base_prog| {
                let mut bits = Vec::with_capacity(delta_bits as usize + base_prog.len());
                // tag 100 + trigger + post + base
                bits.extend_from_slice(&[true, false, false]);
                bits.extend_from_slice(trigger_prog.bits());
                bits.extend_from_slice(post_prog.bits());
                bits.extend_from_slice(base_prog.bits());
                ProgramString::from_bits(bits)
            });
        raw.push((
            format!("{}+switch", entry.label),
            Arc::new(SwitchModel {
                base: entry.model.clone(),
                trigger: trigger.clone(),
                post: post_arc.clone(),
            }),
            entry.log_prior - delta_bits as f64 * LN_2,
            program,
        ));
    }

    let log_total = log_sum_exp(raw.iter().map(|(_, _, lw, _)| *lw));
    let n = class.len();
    let entries = raw
        .into_iter()
        .map(|(label, model, lw, program)| ModelEntry {
            label,
            model,
            log_prior: lw - log_total,
            program,
        })
        .collect();
    Ok(AugmentedClass {
        class: Arc::new(ModelClass { alphabet, entries }),
        delta_bits,
        base_indices: (0..n).collect(),
        variant_indices: (n..2 * n).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_model_class() -> Arc<ModelClass> {
        let a = Alphabet::binary();
        Arc::new(
            ModelClass::from_weights(
                a,
                vec![
                    (
                        "always-0".into(),
                        Arc::new(Predictor::Constant {
                            alphabet: a,
                            symbol: 0,
                        }),
                        0.5,
                    ),
                    (
                        "bern-half".into(),
                        Arc::new(Predictor::bernoulli(0.5).unwrap()),
                        0.5,
                    ),
                ],
            )
            .unwrap(),
        )
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn posterior_after_one_symbol() {
        // likelihoods 1 vs 0.5 from equal priors
        let state = ModelClassPosterior::new(two_model_class());
        let state = state.update(0).unwrap();
        let w = state.posterior(PosteriorStream::Action).unwrap();
        assert_close(w[0], 2.0 / 3.0, 1e-15);
        assert_close(w[1], 1.0 / 3.0, 1e-15);
        // the observation ledger is untouched by an action symbol
        let wo = state.posterior(PosteriorStream::Observation).unwrap();
        assert_close(wo[0], 0.5, 1e-15);
        let wj = state.posterior(PosteriorStream::Joint).unwrap();
        assert_close(wj[0], 2.0 / 3.0, 1e-15);
    }

    #[test]
    fn identical_likelihoods_leave_posterior_unchanged() {
        let a = Alphabet::binary();
        let class = Arc::new(
            ModelClass::from_weights(
                a,
                vec![
                    (
                        "b1".into(),
                        Arc::new(Predictor::bernoulli(0.3).unwrap()),
                        0.7,
                    ),
                    (
                        "b2".into(),
                        Arc::new(Predictor::bernoulli(0.3).unwrap()),
                        0.3,
                    ),
                ],
            )
            .unwrap(),
        );
        let state = ModelClassPosterior::new(class)
            .update(1)
            .unwrap()
            .update(0)
            .unwrap();
        let w = state.posterior(PosteriorStream::Joint).unwrap();
        assert_close(w[0], 0.7, 1e-12);
    }

    #[test]
    fn excluded_symbol_zeroes_a_model() {
        let state = ModelClassPosterior::new(two_model_class());
        let state = state.update(1).unwrap();
        let w = state.posterior(PosteriorStream::Action).unwrap();
        assert_eq!(w[0], 0.0);
        assert_close(w[1], 1.0, 1e-15);
    }

    #[test]
    fn degenerate_update_is_an_error_not_a_nan() {
        let a = Alphabet::binary();
        let class = Arc::new(
            ModelClass::from_weights(
                a,
                vec![(
                    "always-0".into(),
                    Arc::new(Predictor::Constant {
                        alphabet: a,
                        symbol: 0,
                    }) as Arc<dyn SemiDistribution>,
                    1.0,
                )],
            )
            .unwrap(),
        );
        let state = ModelClassPosterior::new(class);
        assert!(matches!(
            state.update(1),
            Err(MixtureError::DegeneratePosterior { .. })
        ));
    }

    #[test]
    fn mixture_prediction_from_prior() {
        let state = ModelClassPosterior::new(two_model_class());
        let xi = state.predict(Parity::Action).unwrap();
        assert_close(xi[0], 0.75, 1e-15);
        assert_close(xi[1], 0.25, 1e-15);
    }

    #[test]
    fn single_model_mixture_is_that_model() {
        let a = Alphabet::binary();
        let m = Predictor::bernoulli(0.3).unwrap();
        let class = Arc::new(
            ModelClass::from_weights(a, vec![("m".into(), Arc::new(m.clone()), 1.0)]).unwrap(),
        );
        let xi = MixtureDist::new(class);
        let h = History::from([0, 1, 1]);
        for s in a.symbols() {
            assert_close(xi.prob(&h, s), m.prob(&h, s), 1e-15);
        }
    }

    #[test]
    fn sequential_equals_batch_posterior() {
        let class = two_model_class();
        let h = History::from([0, 1, 0, 0, 1, 0]);
        let seq = {
            let mut s = ModelClassPosterior::new(class.clone());
            for &x in h.symbols() {
                s = s.update(x).unwrap();
            }
            s
        };
        let batch = ModelClassPosterior::conditioned_on(class, &h).unwrap();
        for stream in [
            PosteriorStream::Action,
            PosteriorStream::Observation,
            PosteriorStream::Joint,
        ] {
            let a = seq.posterior(stream).unwrap();
            let b = batch.posterior(stream).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_close(*x, *y, 1e-9);
            }
        }
    }

    #[test]
    fn joint_probability_identity() {
        // ξ(x_{<t}) = Σ w(ν) ν(x_{<t}) for the single-posterior mixture
        let class = two_model_class();
        let xi = MixtureDist::joint(class.clone());
        for h in [
            History::from([0, 0, 0, 0]),
            History::from([0, 0, 0, 1]),
            History::from([0, 1, 0, 0, 0, 0]),
        ] {
            let lhs = crate::semidist::joint_probability(&xi, &h);
            let mut rhs = 0.0;
            for entry in class.entries() {
                rhs += entry.log_prior.exp()
                    * crate::semidist::joint_probability(entry.model.as_ref(), &h);
            }
            assert_close(lhs, rhs, 1e-12);
        }
    }

    #[test]
    fn split_mixture_action_block_identity() {
        // the probability the split mixture assigns to a whole action
        // block (observations fixed) telescopes to the w_a-weighted sum of
        // per-model block probabilities
        let class = two_model_class();
        let xi = MixtureDist::new(class.clone());
        let start = History::from([0, 0]);
        let obs = [1u8, 0u8];
        for block in [[0u8, 0u8], [0, 1], [1, 0], [1, 1]] {
            let mut h = start.clone();
            let mut lhs = 1.0;
            for (a, o) in block.iter().zip(&obs) {
                lhs *= xi.prob(&h, *a);
                h = h.child(*a).child(*o);
            }
            let state = ModelClassPosterior::conditioned_on(class.clone(), &start).unwrap();
            let wa = state.posterior(PosteriorStream::Action).unwrap();
            let mut rhs = 0.0;
            for (w, entry) in wa.iter().zip(class.entries()) {
                let mut p = *w;
                let mut hh = start.clone();
                for (a, o) in block.iter().zip(&obs) {
                    p *= entry.model.prob(&hh, *a);
                    hh = hh.child(*a).child(*o);
                }
                rhs += p;
            }
            assert_close(lhs, rhs, 1e-12);
        }
    }

    #[test]
    fn mixture_dominance() {
        // ξ(x|h) >= w(ν|h) ν(x|h) pointwise
        let class = two_model_class();
        let h = History::from([0, 0]);
        let state = ModelClassPosterior::conditioned_on(class.clone(), &h).unwrap();
        let xi = state.predict(Parity::Action).unwrap();
        let w = state.posterior(PosteriorStream::Action).unwrap();
        for (i, entry) in class.entries().iter().enumerate() {
            for s in class.alphabet().symbols() {
                assert!(xi[s as usize] + 1e-15 >= w[i] * entry.model.prob(&h, s));
            }
        }
    }

    #[test]
    fn switch_variant_prior_and_posterior_ratio() {
        let class = two_model_class();
        let trigger = Event::last_obs_equals(1);
        let post = Predictor::Constant {
            alphabet: Alphabet::binary(),
            symbol: 1,
        };
        let aug = augment_with_switch_variants(&class, &trigger, &post).unwrap();
        let expect = -(aug.delta_bits as f64) * LN_2;

        // prior ratio
        for (&b, &v) in aug.base_indices.iter().zip(&aug.variant_indices) {
            let d = aug.class.entries()[v].log_prior - aug.class.entries()[b].log_prior;
            assert_close(d, expect, 1e-9);
        }

        // trigger-free history: observations stay 0
        let h = History::from([0, 0, 1, 0, 0, 0]);
        let state = ModelClassPosterior::conditioned_on(aug.class.clone(), &h).unwrap();
        for stream in [PosteriorStream::Action, PosteriorStream::Joint] {
            let lw = state.log_posterior_unnormalized(stream);
            for (&b, &v) in aug.base_indices.iter().zip(&aug.variant_indices) {
                if lw[b] == f64::NEG_INFINITY {
                    continue;
                }
                assert_close(lw[v] - lw[b], expect, 1e-9);
            }
        }
    }

    #[test]
    fn switch_variant_behaves_as_post_after_trigger() {
        let a = Alphabet::binary();
        let base: Arc<dyn SemiDistribution> = Arc::new(Predictor::bernoulli(0.5).unwrap());
        let post: Arc<dyn SemiDistribution> = Arc::new(Predictor::Constant {
            alphabet: a,
            symbol: 1,
        });
        let sw = SwitchModel {
            base: base.clone(),
            trigger: Event::last_obs_equals(1),
            post,
        };
        // before trigger
        assert_eq!(sw.prob(&History::from([0, 0]), 1), 0.5);
        // trigger fires at the end of the context
        assert_eq!(sw.prob(&History::from([0, 1]), 1), 1.0);
        // observation positions stay with the base even after the trigger
        assert_eq!(sw.prob(&History::from([0, 1, 1]), 1), 0.5);
        // once happened, stays happened
        assert_eq!(sw.prob(&History::from([0, 1, 1, 0]), 1), 1.0);
    }

    #[test]
    fn augmented_class_doubles_and_normalizes() {
        let class = two_model_class();
        let aug = augment_with_switch_variants(
            &class,
            &Event::never(),
            &Predictor::Constant {
                alphabet: Alphabet::binary(),
                symbol: 0,
            },
        )
        .unwrap();
        assert_eq!(aug.class.len(), 4);
        let total: f64 = aug.class.prior().iter().sum();
        assert_close(total, 1.0, 1e-12);
    }
}
