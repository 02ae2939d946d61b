//! Exact finite-horizon expectimax against a fixed environment predictor.
//!
//! Values follow the alternating-expectation form: actions are drawn from
//! the policy (or maximized over, for optimal values), observations from
//! the environment, and the utility scores the complete `2m`-symbol
//! history. Both the policy and the environment may be semi-distributions;
//! mass they fail to place ends the sequence, and interrupted sequences
//! score according to the configured rule (0 by default).
//!
//! Everything here is exact enumeration. When the tree would exceed the
//! node cap the operation refuses instead of approximating.

use crate::alphabet::Symbol;
use crate::history::History;
use crate::semidist::SemiDistribution;
use crate::utility::{UtilityError, UtilityFunction};
use std::collections::HashMap;
use thiserror::Error;

/// Value-comparison tolerance for Bellman-style identities.
pub const VALUE_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("enumeration of ~{nodes} nodes exceeds the cap of {cap}")]
    Capacity { nodes: u128, cap: u64 },
    #[error("start history must end at an action boundary (even length), got {0}")]
    StartParity(usize),
    #[error("start history already has {steps_done} steps, horizon is {horizon}")]
    HorizonPassed { steps_done: usize, horizon: usize },
    #[error("utility evaluation failed: {0}")]
    Utility(#[from] UtilityError),
}

/// Utility granted to sequences interrupted by deficiency mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnfinishedRule {
    /// Interrupted sequences score 0 — the default, which pushes
    /// optimizers to keep acting.
    Zero,
    /// Interrupted sequences score a fixed utility in [0, 1].
    Constant(f64),
}

impl UnfinishedRule {
    fn utility(&self) -> f64 {
        match self {
            UnfinishedRule::Zero => 0.0,
            UnfinishedRule::Constant(c) => *c,
        }
    }
}

impl Default for UnfinishedRule {
    fn default() -> Self {
        UnfinishedRule::Zero
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanningLimits {
    pub max_nodes: u64,
}

impl Default for PlanningLimits {
    fn default() -> Self {
        PlanningLimits {
            max_nodes: 10_000_000,
        }
    }
}

/// A value computation: environment, optional policy (absent for optimal
/// values), utility, and the history to continue from.
pub struct ValueQuery<'a> {
    pub environment: &'a dyn SemiDistribution,
    pub policy: Option<&'a dyn SemiDistribution>,
    pub utility: &'a UtilityFunction,
    pub start: &'a History,
    pub unfinished: UnfinishedRule,
    pub limits: PlanningLimits,
}

impl<'a> ValueQuery<'a> {
    /// Remaining action steps between the start history and the horizon.
    fn steps(&self) -> Result<usize, PlanError> {
        if self.start.len() % 2 != 0 {
            return Err(PlanError::StartParity(self.start.len()));
        }
        let done = self.start.completed_steps();
        let m = self.utility.horizon();
        if done > m {
            return Err(PlanError::HorizonPassed {
                steps_done: done,
                horizon: m,
            });
        }
        let steps = m - done;
        let k = self.environment.alphabet().size() as u128;
        let nodes = k
            .checked_pow(2 * steps as u32)
            .unwrap_or(u128::MAX);
        if nodes > self.limits.max_nodes as u128 {
            return Err(PlanError::Capacity {
                nodes,
                cap: self.limits.max_nodes,
            });
        }
        Ok(steps)
    }
}

/// Value of the query's policy: exact alternating expectation of the
/// utility.
pub fn policy_value(q: &ValueQuery) -> Result<f64, PlanError> {
    let steps = q.steps()?;
    let policy = q.policy.expect("policy_value needs a policy in the query");
    Ok(walk_policy(q, policy, q.start, steps)?)
}

fn walk_policy(
    q: &ValueQuery,
    policy: &dyn SemiDistribution,
    h: &History,
    steps: usize,
) -> Result<f64, PlanError> {
    if steps == 0 {
        return Ok(q.utility.eval(h)?);
    }
    let halt = q.unfinished.utility();
    let mut value = 0.0;
    let mut action_mass = 0.0;
    for a in q.environment.alphabet().symbols() {
        let pa = policy.prob(h, a);
        if pa == 0.0 {
            continue;
        }
        action_mass += pa;
        let ha = h.child(a);
        let mut obs_value = 0.0;
        let mut obs_mass = 0.0;
        for o in q.environment.alphabet().symbols() {
            let po = q.environment.prob(&ha, o);
            if po == 0.0 {
                continue;
            }
            obs_mass += po;
            obs_value += po * walk_policy(q, policy, &ha.child(o), steps - 1)?;
        }
        value += pa * (obs_value + (1.0 - obs_mass) * halt);
    }
    Ok(value + (1.0 - action_mass) * halt)
}

/// Optimal value: backward-induction max over actions, expectation over
/// observations.
pub fn optimal_value(q: &ValueQuery) -> Result<f64, PlanError> {
    let steps = q.steps()?;
    walk_optimal(q, q.start, steps)
}

fn walk_optimal(q: &ValueQuery, h: &History, steps: usize) -> Result<f64, PlanError> {
    if steps == 0 {
        return Ok(q.utility.eval(h)?);
    }
    let mut best = f64::NEG_INFINITY;
    for a in q.environment.alphabet().symbols() {
        let qa = action_continuation(q, &h.child(a), steps)?;
        if qa > best {
            best = qa;
        }
    }
    Ok(best)
}

/// Expected optimal continuation after taking the action ending `ha`.
fn action_continuation(q: &ValueQuery, ha: &History, steps: usize) -> Result<f64, PlanError> {
    let halt = q.unfinished.utility();
    let mut value = 0.0;
    let mut mass = 0.0;
    for o in q.environment.alphabet().symbols() {
        let po = q.environment.prob(ha, o);
        if po == 0.0 {
            continue;
        }
        mass += po;
        value += po * walk_optimal(q, &ha.child(o), steps - 1)?;
    }
    Ok(value + (1.0 - mass) * halt)
}

/// Q-values `E_o V*(h·a·o)` for every action at the query's start.
pub fn action_values(q: &ValueQuery) -> Result<Vec<f64>, PlanError> {
    let steps = q.steps()?;
    if steps == 0 {
        return Err(PlanError::HorizonPassed {
            steps_done: q.start.completed_steps(),
            horizon: q.utility.horizon(),
        });
    }
    q.environment
        .alphabet()
        .symbols()
        .map(|a| action_continuation(q, &q.start.child(a), steps))
        .collect()
}

/// Is `action` V-optimal at the query's start: does its expected optimal
/// continuation match the optimal value within [`VALUE_TOL`]?
pub fn is_v_optimal(q: &ValueQuery, action: Symbol) -> Result<bool, PlanError> {
    let qs = action_values(q)?;
    let best = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((qs[action as usize] - best).abs() <= VALUE_TOL)
}

/// A deterministic policy on the subtree below its extraction point;
/// contexts it never planned for fall back to symbol 0.
#[derive(Debug, Clone)]
pub struct SubtreePolicy {
    alphabet: crate::alphabet::Alphabet,
    choices: HashMap<Vec<Symbol>, Symbol>,
}

impl SubtreePolicy {
    pub fn choices(&self) -> &HashMap<Vec<Symbol>, Symbol> {
        &self.choices
    }

    pub fn choice_at(&self, h: &History) -> Symbol {
        *self.choices.get(h.symbols()).unwrap_or(&0)
    }
}

impl SemiDistribution for SubtreePolicy {
    fn prob(&self, history: &History, symbol: Symbol) -> f64 {
        if self.choice_at(history) == symbol {
            1.0
        } else {
            0.0
        }
    }

    fn alphabet(&self) -> crate::alphabet::Alphabet {
        self.alphabet
    }
}

/// Extract the optimal deterministic policy by backward induction,
/// breaking ties toward the lowest symbol index.
pub fn extract_optimal_policy(q: &ValueQuery) -> Result<SubtreePolicy, PlanError> {
    let steps = q.steps()?;
    let mut policy = SubtreePolicy {
        alphabet: q.environment.alphabet(),
        choices: HashMap::new(),
    };
    walk_extract(q, q.start, steps, &mut policy)?;
    Ok(policy)
}

fn walk_extract(
    q: &ValueQuery,
    h: &History,
    steps: usize,
    policy: &mut SubtreePolicy,
) -> Result<f64, PlanError> {
    if steps == 0 {
        return Ok(q.utility.eval(h)?);
    }
    let halt = q.unfinished.utility();
    let mut best = f64::NEG_INFINITY;
    let mut best_action = 0;
    for a in q.environment.alphabet().symbols() {
        let ha = h.child(a);
        let mut value = 0.0;
        let mut mass = 0.0;
        for o in q.environment.alphabet().symbols() {
            let po = q.environment.prob(&ha, o);
            if po == 0.0 {
                continue;
            }
            mass += po;
            value += po * walk_extract(q, &ha.child(o), steps - 1, policy)?;
        }
        let qa = value + (1.0 - mass) * halt;
        if qa > best {
            best = qa;
            best_action = a;
        }
    }
    policy.choices.insert(h.symbols().to_vec(), best_action);
    Ok(best)
}

/// Every action-position context reachable within `steps` of `start`
/// (all observation branches included), in enumeration order.
pub fn enumerate_action_contexts(
    alphabet: crate::alphabet::Alphabet,
    start: &History,
    steps: usize,
) -> Vec<History> {
    let mut out = Vec::new();
    let mut frontier = vec![start.clone()];
    for _ in 0..steps {
        out.extend(frontier.iter().cloned());
        let mut next = Vec::new();
        for h in &frontier {
            for a in alphabet.symbols() {
                for o in alphabet.symbols() {
                    next.push(h.child(a).child(o));
                }
            }
        }
        frontier = next;
    }
    out
}

/// Exhaustive reference implementations, deliberately independent of the
/// recursive planner above: values by complete-path enumeration and
/// optima by enumerating whole deterministic policies. The test suites
/// check the planner against these.
pub mod bruteforce {
    use super::*;

    /// Policy value as a plain sum over complete paths. Assumes proper
    /// (mass-1) policy and environment.
    pub fn policy_value_by_paths(
        env: &dyn SemiDistribution,
        policy: &dyn SemiDistribution,
        utility: &UtilityFunction,
        start: &History,
    ) -> f64 {
        let steps = utility.horizon() - start.completed_steps();
        let mut total = 0.0;
        let mut stack: Vec<(History, f64)> = vec![(start.clone(), 1.0)];
        for _ in 0..steps {
            let mut next = Vec::new();
            for (h, p) in stack {
                for a in env.alphabet().symbols() {
                    let pa = policy.prob(&h, a);
                    if pa == 0.0 {
                        continue;
                    }
                    let ha = h.child(a);
                    for o in env.alphabet().symbols() {
                        let po = env.prob(&ha, o);
                        if po == 0.0 {
                            continue;
                        }
                        next.push((ha.child(o), p * pa * po));
                    }
                }
            }
            stack = next;
        }
        for (h, p) in stack {
            total += p * utility.eval(&h).unwrap();
        }
        total
    }

    /// Optimal value as the max of `policy_value_by_paths` over every
    /// deterministic subtree policy. Exponential in the context count;
    /// callers keep instances tiny.
    pub fn optimal_value_by_policy_enumeration(
        env: &dyn SemiDistribution,
        utility: &UtilityFunction,
        start: &History,
    ) -> f64 {
        let steps = utility.horizon() - start.completed_steps();
        let contexts = enumerate_action_contexts(env.alphabet(), start, steps);
        let k = env.alphabet().size();
        let combos = (k as u128).pow(contexts.len() as u32);
        assert!(combos <= 1 << 22, "policy enumeration too large: {combos}");
        let mut best = f64::NEG_INFINITY;
        for mut code in 0..combos {
            let mut choices = HashMap::new();
            for ctx in &contexts {
                choices.insert(ctx.symbols().to_vec(), (code % k as u128) as Symbol);
                code /= k as u128;
            }
            let policy = SubtreePolicy {
                alphabet: env.alphabet(),
                choices,
            };
            let v = policy_value_by_paths(env, &policy, utility, start);
            if v > best {
                best = v;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::semidist::Predictor;
    use crate::utility::UtilityKind;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn query<'a>(
        env: &'a dyn SemiDistribution,
        policy: Option<&'a dyn SemiDistribution>,
        utility: &'a UtilityFunction,
        start: &'a History,
    ) -> ValueQuery<'a> {
        ValueQuery {
            environment: env,
            policy,
            utility,
            start,
            unfinished: UnfinishedRule::Zero,
            limits: PlanningLimits::default(),
        }
    }

    #[test]
    fn deterministic_rollout_value() {
        let env = Predictor::Constant {
            alphabet: Alphabet::binary(),
            symbol: 1,
        };
        let pol = Predictor::Constant {
            alphabet: Alphabet::binary(),
            symbol: 1,
        };
        let u = UtilityFunction::new(2, UtilityKind::MeanObservationMatches(1)).unwrap();
        let start = History::empty();
        let v = policy_value(&query(&env, Some(&pol), &u, &start)).unwrap();
        assert_close(v, 1.0, 1e-15);
    }

    #[test]
    fn uniform_two_step_symmetry() {
        // uniform policy, Bern(1/2) environment, utility = fraction of
        // observations equal to 1, two steps: 0.5 by symmetry
        let env = Predictor::bernoulli(0.5).unwrap();
        let pol = Predictor::Uniform {
            alphabet: Alphabet::binary(),
        };
        let u = UtilityFunction::new(2, UtilityKind::MeanObservationMatches(1)).unwrap();
        let start = History::empty();
        let v = policy_value(&query(&env, Some(&pol), &u, &start)).unwrap();
        assert_close(v, 0.5, 1e-12);
        let oracle = bruteforce::policy_value_by_paths(&env, &pol, &u, &start);
        assert_close(v, oracle, 1e-15);
    }

    #[test]
    fn single_step_indicator_optimum() {
        let env = Predictor::bernoulli(0.3).unwrap();
        let u = UtilityFunction::new(1, UtilityKind::MeanActionMatches(1)).unwrap();
        let start = History::empty();
        assert_close(optimal_value(&query(&env, None, &u, &start)).unwrap(), 1.0, 1e-15);
    }

    #[test]
    fn two_step_asymmetric_matches_policy_enumeration() {
        let a = Alphabet::binary();
        // observation depends on the action taken
        let env = Predictor::context_table(
            a,
            1,
            vec![
                crate::semidist::WeightRow::proper(vec![4, 1]),
                crate::semidist::WeightRow::proper(vec![1, 4]),
            ],
        )
        .unwrap();
        let u = UtilityFunction::new(2, UtilityKind::MeanObservationMatches(1)).unwrap();
        let start = History::empty();
        let q = query(&env, None, &u, &start);
        let v = optimal_value(&q).unwrap();
        let oracle = bruteforce::optimal_value_by_policy_enumeration(&env, &u, &start);
        assert_close(v, oracle, 1e-10);
        // and the extracted policy achieves it
        let pol = extract_optimal_policy(&q).unwrap();
        let vpol = policy_value(&query(&env, Some(&pol), &u, &start)).unwrap();
        assert_close(vpol, v, 1e-10);
    }

    #[test]
    fn optimal_dominates_policies() {
        let env = Predictor::bernoulli(0.4).unwrap();
        let u = UtilityFunction::new(2, UtilityKind::MeanActionMatches(0)).unwrap();
        let start = History::empty();
        let vstar = optimal_value(&query(&env, None, &u, &start)).unwrap();
        for p in [0.0, 0.3, 0.7, 1.0] {
            let pol = Predictor::bernoulli(p).unwrap();
            let v = policy_value(&query(&env, Some(&pol), &u, &start)).unwrap();
            assert!(v <= vstar + VALUE_TOL);
        }
    }

    #[test]
    fn v_optimality_flags_the_argmax() {
        let a = Alphabet::binary();
        let env = Predictor::bernoulli(0.5).unwrap();
        let u = UtilityFunction::new(1, UtilityKind::MeanActionMatches(1)).unwrap();
        let start = History::empty();
        let q = query(&env, None, &u, &start);
        assert!(is_v_optimal(&q, 1).unwrap());
        assert!(!is_v_optimal(&q, 0).unwrap());
        // symmetric utility: every action is V-optimal
        let u2 = UtilityFunction::new(1, UtilityKind::MeanObservationMatches(1)).unwrap();
        let q2 = query(&env, None, &u2, &start);
        for s in a.symbols() {
            assert!(is_v_optimal(&q2, s).unwrap());
        }
    }

    #[test]
    fn deficiency_scores_by_rule() {
        // policy halts with probability 1/2 at the single step
        let a = Alphabet::binary();
        let pol = Predictor::iid(a, crate::semidist::WeightRow::new(vec![1, 0], 1)).unwrap();
        let env = Predictor::bernoulli(0.5).unwrap();
        let u = UtilityFunction::new(1, UtilityKind::MeanActionMatches(0)).unwrap();
        let start = History::empty();
        let mut q = query(&env, Some(&pol), &u, &start);
        assert_close(policy_value(&q).unwrap(), 0.5, 1e-15);
        q.unfinished = UnfinishedRule::Constant(1.0);
        assert_close(policy_value(&q).unwrap(), 1.0, 1e-15);
    }

    #[test]
    fn capacity_refusal() {
        let env = Predictor::bernoulli(0.5).unwrap();
        let u = UtilityFunction::new(14, UtilityKind::MeanActionMatches(0)).unwrap();
        let start = History::empty();
        let mut q = query(&env, None, &u, &start);
        q.limits = PlanningLimits { max_nodes: 1000 };
        assert!(matches!(
            optimal_value(&q),
            Err(PlanError::Capacity { .. })
        ));
    }

    #[test]
    fn monotone_in_utility() {
        let env = Predictor::bernoulli(0.6).unwrap();
        let start = History::empty();
        let low = UtilityFunction::new(2, UtilityKind::ObservationReward(vec![0.1, 0.4])).unwrap();
        let high = UtilityFunction::new(2, UtilityKind::ObservationReward(vec![0.2, 0.6])).unwrap();
        let vl = optimal_value(&query(&env, None, &low, &start)).unwrap();
        let vh = optimal_value(&query(&env, None, &high, &start)).unwrap();
        assert!(vh >= vl - VALUE_TOL);
    }
}
