//! The pessimistic Bayesian imitator and its guarantees.
//!
//! The top set at a context collects the models whose posterior weight is
//! at least `α` times the cumulative posterior of all models at least as
//! likely; the pessimistic imitator predicts the pointwise *minimum* over
//! the top set and would ask for help with the missing mass. Because the
//! minimum sits below every member, KL regularization toward it is at
//! least as strong as regularization toward any member — in particular
//! toward the true demonstrator whenever it stays in the top set, which
//! it does with probability at least `1-δ` when `α < δ·w(μ)`.
//!
//! Top sets here use the ordinary joint posterior (the imitation setting
//! is purely predictive); ties in posterior weight break by model index,
//! so runs are reproducible.

use crate::alphabet::{Alphabet, Parity, Symbol};
use crate::divergence::{self, DivergenceError, DivergenceReport};
use crate::history::History;
use crate::mixture::{MixtureError, ModelClass, ModelClassPosterior, PosteriorStream};
use crate::planning::PlanningLimits;
use crate::sampling::{rng_for, sample_path, SamplingError};
use crate::semidist::SemiDistribution;
use statrs::distribution::{Beta, ContinuousCDF};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PessimistError {
    #[error("alpha must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("model index {index} out of range for class of {len}")]
    ModelIndex { index: usize, len: usize },
    #[error(
        "retention needs alpha < delta * prior(mu): alpha={alpha}, delta={delta}, prior={prior}"
    )]
    RetentionPrecondition { alpha: f64, delta: f64, prior: f64 },
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error("sampling from the demonstrator failed: {0}")]
    Sampling(#[from] SamplingError),
}

/// The top set at one context.
#[derive(Debug, Clone)]
pub struct TopSet {
    pub alpha: f64,
    /// Model indices in the set.
    pub members: Vec<usize>,
    /// `(model index, posterior weight)`, posterior descending, index
    /// ascending on ties.
    pub sorted_posteriors: Vec<(usize, f64)>,
}

impl TopSet {
    pub fn contains(&self, index: usize) -> bool {
        self.members.contains(&index)
    }

    pub fn is_singleton(&self, index: usize) -> bool {
        self.members.len() == 1 && self.members[0] == index
    }
}

/// Top set of the given posterior stream at the state's context.
pub fn top_set(
    state: &ModelClassPosterior,
    alpha: f64,
    stream: PosteriorStream,
) -> Result<TopSet, PessimistError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(PessimistError::AlphaOutOfRange(alpha));
    }
    let weights = state.posterior(stream)?;
    let mut sorted: Vec<(usize, f64)> = weights.iter().copied().enumerate().collect();
    sorted.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut members = Vec::new();
    let mut cumulative = 0.0;
    for &(index, weight) in &sorted {
        cumulative += weight;
        if weight >= alpha * cumulative {
            members.push(index);
        } else {
            // weights only shrink and the cumulative only grows from here
            break;
        }
    }
    members.sort_unstable();
    Ok(TopSet {
        alpha,
        members,
        sorted_posteriors: sorted,
    })
}

/// The pessimistic prediction at one context.
#[derive(Debug, Clone)]
pub struct PessimisticPrediction {
    /// Per-symbol minimum over the top set.
    pub probs: Vec<f64>,
    /// `1 - Σ` of the minima: the ask-for-help probability.
    pub help_mass: f64,
    pub top_set: TopSet,
}

/// Min-over-top-set prediction for the next position of the given parity.
pub fn pessimistic_predict(
    state: &ModelClassPosterior,
    alpha: f64,
    parity: Parity,
) -> Result<PessimisticPrediction, PessimistError> {
    debug_assert_eq!(parity, state.history().next_parity());
    let ts = top_set(state, alpha, PosteriorStream::Joint)?;
    let class = state.class();
    let k = class.alphabet().size();
    let mut probs = vec![f64::INFINITY; k];
    for &i in &ts.members {
        let model = &class.entries()[i].model;
        for (s, slot) in probs.iter_mut().enumerate() {
            *slot = slot.min(model.prob(state.history(), s as Symbol));
        }
    }
    let mass: f64 = probs.iter().sum();
    Ok(PessimisticPrediction {
        probs,
        help_mass: 1.0 - mass,
        top_set: ts,
    })
}

/// The pessimistic imitator `ν_α` as a semi-distribution: at every
/// context, the pointwise minimum over that context's joint-posterior top
/// set. Contexts no model can produce get zero mass.
pub struct PessimisticDist {
    class: Arc<ModelClass>,
    alpha: f64,
}

impl PessimisticDist {
    pub fn new(class: Arc<ModelClass>, alpha: f64) -> Result<Self, PessimistError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(PessimistError::AlphaOutOfRange(alpha));
        }
        Ok(PessimisticDist { class, alpha })
    }
}

impl SemiDistribution for PessimisticDist {
    fn prob(&self, history: &History, symbol: Symbol) -> f64 {
        let state = match ModelClassPosterior::conditioned_on(self.class.clone(), history) {
            Ok(s) => s,
            Err(_) => return 0.0,
        };
        match pessimistic_predict(&state, self.alpha, history.next_parity()) {
            Ok(p) => p.probs[symbol as usize],
            Err(_) => 0.0,
        }
    }

    fn alphabet(&self) -> Alphabet {
        self.class.alphabet()
    }
}

// ---------------------------------------------------------------------------
// Containment
// ---------------------------------------------------------------------------

/// Result of checking `ν_α ≤ μ` and the induced KL ordering.
#[derive(Debug, Clone)]
pub struct ContainmentReport {
    pub contexts_checked: usize,
    pub contexts_with_mu_in_top_set: usize,
    /// Contexts where `μ` fell out of the top set (the theorem's
    /// precondition fails there).
    pub contexts_where_mu_left: Vec<History>,
    /// Pointwise violations of `ν_α ≤ μ` on contexts with `μ` in the top
    /// set. Empty by construction of the minimum.
    pub pointwise_violations: Vec<(History, Symbol)>,
    /// Whether every enumerated context kept the top set at exactly `{μ}`.
    pub top_set_always_singleton_mu: bool,
    pub kl_pi_vs_pessimist: DivergenceReport,
    pub kl_pi_vs_mu: DivergenceReport,
    /// `KL(π ‖ ν_α) ≥ KL(π ‖ μ)` (infinities included).
    pub kl_ordering_holds: bool,
}

/// Enumerate every context reachable from `start` up to the horizon,
/// verify `ν_α ≤ μ` pointwise wherever `μ` is in the top set, and compare
/// the lifetime KL of `pi` toward `ν_α` and toward `μ`.
pub fn containment_check(
    pi: &dyn SemiDistribution,
    class: &Arc<ModelClass>,
    alpha: f64,
    mu_index: usize,
    start: &History,
    m: usize,
    limits: PlanningLimits,
) -> Result<ContainmentReport, PessimistError> {
    if mu_index >= class.len() {
        return Err(PessimistError::ModelIndex {
            index: mu_index,
            len: class.len(),
        });
    }
    let alphabet = class.alphabet();
    let mu = class.entries()[mu_index].model.clone();
    let pessimist = PessimisticDist::new(class.clone(), alpha)?;

    let mut contexts_checked = 0;
    let mut contexts_with_mu = 0;
    let mut left = Vec::new();
    let mut violations = Vec::new();
    let mut always_singleton = true;

    let depth = 2 * (m - start.completed_steps());
    let mut frontier = vec![start.clone()];
    for level in 0..=depth {
        let mut next = Vec::new();
        for h in &frontier {
            contexts_checked += 1;
            match ModelClassPosterior::conditioned_on(class.clone(), h) {
                Ok(state) => {
                    let ts = top_set(&state, alpha, PosteriorStream::Joint)?;
                    if ts.contains(mu_index) {
                        contexts_with_mu += 1;
                        for s in alphabet.symbols() {
                            if pessimist.prob(h, s) > mu.prob(h, s) {
                                violations.push((h.clone(), s));
                            }
                        }
                    } else {
                        left.push(h.clone());
                    }
                    if !ts.is_singleton(mu_index) {
                        always_singleton = false;
                    }
                }
                Err(_) => continue, // context unreachable under every model
            }
            if level < depth {
                for s in alphabet.symbols() {
                    next.push(h.child(s));
                }
            }
        }
        frontier = next;
    }

    let kl_pess = divergence::lifetime_kl(pi, &pessimist, start, m, limits)?;
    let kl_mu = divergence::lifetime_kl(pi, mu.as_ref(), start, m, limits)?;
    let ordering = kl_pess.value >= kl_mu.value
        || (kl_pess.value.is_infinite() && kl_mu.value.is_infinite());
    Ok(ContainmentReport {
        contexts_checked,
        contexts_with_mu_in_top_set: contexts_with_mu,
        contexts_where_mu_left: left,
        pointwise_violations: violations,
        top_set_always_singleton_mu: always_singleton,
        kl_pi_vs_pessimist: kl_pess,
        kl_pi_vs_mu: kl_mu,
        kl_ordering_holds: ordering,
    })
}

// ---------------------------------------------------------------------------
// Retention
// ---------------------------------------------------------------------------

/// Outcome of the retention experiment.
#[derive(Debug, Clone)]
pub struct RetentionReport {
    pub num_histories: usize,
    pub history_length: usize,
    pub alpha: f64,
    pub delta: f64,
    pub retained: usize,
    /// Fraction of sampled histories on which `μ` stayed in the top set
    /// at every prefix.
    pub frequency: f64,
    /// Exact (Clopper-Pearson) 95% interval for the retention
    /// probability.
    pub interval95: (f64, f64),
    /// For each non-retained history, the prefix length at which the
    /// demonstrator first left the top set.
    pub first_exit_prefix: Vec<usize>,
    pub seed: u64,
}

/// Sample `num_histories` trajectories from model `mu_index`, check that
/// it stays in the joint top set at every prefix, and report the
/// frequency with its exact binomial interval. Requires the theorem's
/// precondition `alpha < delta * w(mu)`.
pub fn retention_experiment(
    class: &Arc<ModelClass>,
    mu_index: usize,
    alpha: f64,
    delta: f64,
    num_histories: usize,
    history_length: usize,
    seed: u64,
) -> Result<RetentionReport, PessimistError> {
    if mu_index >= class.len() {
        return Err(PessimistError::ModelIndex {
            index: mu_index,
            len: class.len(),
        });
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(PessimistError::AlphaOutOfRange(alpha));
    }
    let prior = class.entries()[mu_index].log_prior.exp();
    if !(alpha < delta * prior) {
        return Err(PessimistError::RetentionPrecondition {
            alpha,
            delta,
            prior,
        });
    }
    let mu = class.entries()[mu_index].model.clone();

    let mut retained = 0;
    let mut first_exit_prefix = Vec::new();
    for i in 0..num_histories {
        let mut rng = rng_for(seed, i as u64);
        let path = sample_path(mu.as_ref(), history_length, &mut rng)?;
        let mut state = ModelClassPosterior::new(class.clone());
        let mut exited_at = None;
        if !top_set(&state, alpha, PosteriorStream::Joint)?.contains(mu_index) {
            exited_at = Some(0);
        } else {
            for (n, &s) in path.symbols().iter().enumerate() {
                state = state.update(s)?;
                if !top_set(&state, alpha, PosteriorStream::Joint)?.contains(mu_index) {
                    exited_at = Some(n + 1);
                    break;
                }
            }
        }
        match exited_at {
            None => retained += 1,
            Some(n) => first_exit_prefix.push(n),
        }
    }
    let frequency = retained as f64 / num_histories as f64;
    Ok(RetentionReport {
        num_histories,
        history_length,
        alpha,
        delta,
        retained,
        frequency,
        interval95: clopper_pearson(retained, num_histories, 0.95),
        first_exit_prefix,
        seed,
    })
}

/// Exact binomial confidence interval.
pub fn clopper_pearson(successes: usize, trials: usize, confidence: f64) -> (f64, f64) {
    let k = successes as f64;
    let n = trials as f64;
    let tail = (1.0 - confidence) / 2.0;
    let lower = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).unwrap().inverse_cdf(tail)
    };
    let upper = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).unwrap().inverse_cdf(1.0 - tail)
    };
    (lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semidist::Predictor;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    /// Class whose posteriors at the empty history equal the prior.
    fn class_with_priors(ps: &[f64], weights: &[f64]) -> Arc<ModelClass> {
        let a = Alphabet::binary();
        Arc::new(
            ModelClass::from_weights(
                a,
                ps.iter()
                    .zip(weights)
                    .enumerate()
                    .map(|(i, (&p, &w))| {
                        (
                            format!("bern-{i}"),
                            Arc::new(Predictor::bernoulli(p).unwrap())
                                as Arc<dyn SemiDistribution>,
                            w,
                        )
                    })
                    .collect(),
            )
            .unwrap(),
        )
    }

    #[test]
    fn top_set_inequality_cases() {
        // posteriors (0.6, 0.3, 0.1)
        let class = class_with_priors(&[0.1, 0.5, 0.9], &[0.6, 0.3, 0.1]);
        let state = ModelClassPosterior::new(class);
        let ts = top_set(&state, 0.2, PosteriorStream::Joint).unwrap();
        // 0.6 >= 0.2*0.6 and 0.3 >= 0.2*0.9, but 0.1 < 0.2*1.0
        assert_eq!(ts.members, vec![0, 1]);
        // alpha = 1 keeps only the strict leader
        let ts1 = top_set(&state, 1.0, PosteriorStream::Joint).unwrap();
        assert_eq!(ts1.members, vec![0]);
        // alpha -> 0 keeps everything with positive posterior
        let ts0 = top_set(&state, 1e-9, PosteriorStream::Joint).unwrap();
        assert_eq!(ts0.members, vec![0, 1, 2]);
    }

    #[test]
    fn top_model_is_always_a_member() {
        let class = class_with_priors(&[0.2, 0.8], &[0.5, 0.5]);
        let state = ModelClassPosterior::new(class).update(1).unwrap();
        for alpha in [0.01, 0.3, 0.7, 1.0] {
            let ts = top_set(&state, alpha, PosteriorStream::Joint).unwrap();
            assert!(ts.contains(ts.sorted_posteriors[0].0));
            assert!(!ts.members.is_empty());
        }
    }

    #[test]
    fn pessimistic_minimum_and_help_mass() {
        // members Bern(0.2) and Bern(0.4): minima (0.6, 0.2), help 0.2
        let class = class_with_priors(&[0.2, 0.4], &[0.5, 0.5]);
        let state = ModelClassPosterior::new(class);
        let p = pessimistic_predict(&state, 0.3, Parity::Action).unwrap();
        assert_close(p.probs[0], 0.6, 1e-15);
        assert_close(p.probs[1], 0.2, 1e-15);
        assert_close(p.help_mass, 0.2, 1e-15);
    }

    #[test]
    fn singleton_top_set_is_that_model() {
        let class = class_with_priors(&[0.3], &[1.0]);
        let state = ModelClassPosterior::new(class);
        let p = pessimistic_predict(&state, 0.5, Parity::Action).unwrap();
        assert_close(p.probs[1], 0.3, 1e-15);
        assert_close(p.help_mass, 0.0, 1e-15);
    }

    #[test]
    fn member_zero_forces_zero() {
        let a = Alphabet::binary();
        let class = Arc::new(
            ModelClass::from_weights(
                a,
                vec![
                    (
                        "always-0".into(),
                        Arc::new(Predictor::Constant {
                            alphabet: a,
                            symbol: 0,
                        }) as Arc<dyn SemiDistribution>,
                        0.5,
                    ),
                    (
                        "bern".into(),
                        Arc::new(Predictor::bernoulli(0.5).unwrap()),
                        0.5,
                    ),
                ],
            )
            .unwrap(),
        );
        let state = ModelClassPosterior::new(class);
        let p = pessimistic_predict(&state, 0.2, Parity::Action).unwrap();
        assert_eq!(p.probs[1], 0.0);
    }

    #[test]
    fn shrinking_alpha_never_increases_the_prediction() {
        let class = class_with_priors(&[0.15, 0.4, 0.75], &[0.5, 0.3, 0.2]);
        let state = ModelClassPosterior::new(class);
        let loose = pessimistic_predict(&state, 0.9, Parity::Action).unwrap();
        let tight = pessimistic_predict(&state, 0.05, Parity::Action).unwrap();
        for (lo, hi) in tight.probs.iter().zip(&loose.probs) {
            assert!(lo <= hi);
        }
    }

    #[test]
    fn help_mass_zero_iff_members_agree() {
        let agree = class_with_priors(&[0.3, 0.3], &[0.5, 0.5]);
        let p = pessimistic_predict(&ModelClassPosterior::new(agree), 0.2, Parity::Action).unwrap();
        assert_close(p.help_mass, 0.0, 1e-15);
        let disagree = class_with_priors(&[0.3, 0.4], &[0.5, 0.5]);
        let q =
            pessimistic_predict(&ModelClassPosterior::new(disagree), 0.2, Parity::Action).unwrap();
        assert!(q.help_mass > 0.0);
    }

    #[test]
    fn pessimist_is_a_semidistribution() {
        let class = class_with_priors(&[0.2, 0.5, 0.8], &[0.4, 0.4, 0.2]);
        let d = PessimisticDist::new(class, 0.1).unwrap();
        assert!(crate::semidist::find_mass_violation(&d, 4).is_none());
    }

    #[test]
    fn containment_pointwise_and_kl_ordering() {
        let class = class_with_priors(&[0.4, 0.6], &[0.5, 0.5]);
        let pi = Predictor::bernoulli(0.7).unwrap();
        let report = containment_check(
            &pi,
            &class,
            0.3,
            0,
            &History::empty(),
            2,
            PlanningLimits::default(),
        )
        .unwrap();
        assert!(report.pointwise_violations.is_empty());
        assert!(report.kl_ordering_holds);
        assert!(report.kl_pi_vs_pessimist.value > report.kl_pi_vs_mu.value);
    }

    #[test]
    fn containment_equality_for_singleton_class() {
        let class = class_with_priors(&[0.4], &[1.0]);
        let pi = Predictor::bernoulli(0.4).unwrap();
        let report = containment_check(
            &pi,
            &class,
            0.5,
            0,
            &History::empty(),
            2,
            PlanningLimits::default(),
        )
        .unwrap();
        assert!(report.top_set_always_singleton_mu);
        assert_close(report.kl_pi_vs_pessimist.value, 0.0, 1e-12);
        assert_close(report.kl_pi_vs_mu.value, 0.0, 1e-12);
    }

    #[test]
    fn retention_trivial_class_is_total() {
        let class = class_with_priors(&[0.5], &[1.0]);
        let r = retention_experiment(&class, 0, 0.05, 0.1, 50, 20, 7).unwrap();
        assert_eq!(r.retained, 50);
        assert_close(r.frequency, 1.0, 1e-15);
    }

    #[test]
    fn retention_precondition_enforced() {
        let class = class_with_priors(&[0.5, 0.2], &[0.5, 0.5]);
        assert!(matches!(
            retention_experiment(&class, 0, 0.2, 0.1, 10, 10, 7),
            Err(PessimistError::RetentionPrecondition { .. })
        ));
    }

    #[test]
    fn clopper_pearson_brackets_the_point_estimate() {
        let (lo, hi) = clopper_pearson(950, 1000, 0.95);
        assert!(lo < 0.95 && 0.95 < hi);
        assert!(lo > 0.93 && hi < 0.97);
        assert_eq!(clopper_pearson(0, 10, 0.95).0, 0.0);
        assert_eq!(clopper_pearson(10, 10, 0.95).1, 1.0);
    }
}
