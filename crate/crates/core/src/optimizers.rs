//! Constrained policy optimization against a fixed environment.
//!
//! The KL-budgeted optimizer runs soft backward induction: at each action
//! node the policy is the base reweighted by the exponentiated soft
//! Q-values at temperature `λ`, and the soft value is `λ` times the log of
//! the base-weighted exponential sum. `λ` is found by bisection so the
//! *expected* lifetime KL meets the budget; because the penalty defined in
//! [`crate::divergence::lifetime_kl`] takes a max over observation
//! sequences, the solution is then certified against that max and `λ` is
//! tightened until certification passes. The returned policy is always
//! feasible; it may be conservative, which the brute-force oracle
//! quantifies on tiny instances.
//!
//! The TVD-budgeted optimizer is a plain dense grid search over per-context
//! simplices — tiny instances only, by construction.

use crate::alphabet::{Alphabet, Symbol};
use crate::divergence::{self, DivergenceError};
use crate::event::Event;
use crate::history::History;
use crate::mixture::{
    augment_with_switch_variants, MixtureDist, MixtureError, ModelClass, SwitchModel, LN_2,
};
use crate::planning::{
    self, enumerate_action_contexts, PlanError, PlanningLimits, UnfinishedRule, ValueQuery,
};
use crate::semidist::{Predictor, SemiDistribution};
use crate::utility::UtilityFunction;
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

/// Relative tolerance for the λ-bisection on the KL budget.
pub const BUDGET_TOL: f64 = 1e-6;
/// Feasibility slack granted to certified constraints.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// λ-bisection bracket.
pub const LAMBDA_MIN: f64 = 1e-6;
pub const LAMBDA_MAX: f64 = 1e6;
/// Iteration cap for each bisection phase.
pub const MAX_BISECT_ITERS: usize = 200;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error("budget must be nonnegative, got {0}")]
    NegativeBudget(f64),
    #[error("grid search supports alphabets of size 2 or 3, got {0}")]
    GridAlphabet(usize),
    #[error("grid of ~{combos} policies exceeds the cap of {cap}")]
    GridCapacity { combos: u128, cap: u64 },
    #[error("grid search needs a proper (mass-1) environment at every context")]
    GridDeficientEnvironment,
    #[error("λ-bisection failed to converge within {0} iterations")]
    NoConvergence(usize),
    #[error("no candidate post policy achieves the target value {target} (best was {best})")]
    InfeasibleTarget { target: f64, best: f64 },
    #[error("trigger must be unprecedented at the start and happen at its final timestep")]
    TriggerNotFresh,
}

/// A stochastic policy given by explicit rows on the contexts it was
/// solved for; unknown contexts fall back to the uniform row.
#[derive(Debug, Clone)]
pub struct TabularPolicy {
    alphabet: Alphabet,
    rows: HashMap<Vec<Symbol>, Vec<f64>>,
}

impl TabularPolicy {
    pub fn new(alphabet: Alphabet, rows: HashMap<Vec<Symbol>, Vec<f64>>) -> Self {
        TabularPolicy { alphabet, rows }
    }

    pub fn rows(&self) -> &HashMap<Vec<Symbol>, Vec<f64>> {
        &self.rows
    }

    pub fn row_at(&self, h: &History) -> Option<&Vec<f64>> {
        self.rows.get(h.symbols())
    }
}

impl SemiDistribution for TabularPolicy {
    fn prob(&self, history: &History, symbol: Symbol) -> f64 {
        match self.rows.get(history.symbols()) {
            Some(row) => row[symbol as usize],
            None => 1.0 / self.alphabet.size() as f64,
        }
    }

    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }
}

/// A certified constrained-optimization result.
#[derive(Debug, Clone)]
pub struct ConstrainedSolution {
    pub policy: TabularPolicy,
    pub achieved_value: f64,
    /// Max-over-observations lifetime KL (nats) or lifetime TVD.
    pub achieved_constraint: f64,
    /// Final temperature, when the soft solver produced the policy.
    pub multiplier: Option<f64>,
    /// The constraint was verified against the max-over-observations
    /// definition after the fact.
    pub certified: bool,
}

// ---------------------------------------------------------------------------
// Subtree cache: contexts, rows, leaf utilities, frozen once per problem
// ---------------------------------------------------------------------------

enum Child {
    Node(usize),
    Leaf(f64),
}

struct ObsEdge {
    env: Vec<f64>,
    children: Vec<Child>,
}

struct ActionNode {
    context: Vec<Symbol>,
    beta: Vec<f64>,
    edges: Vec<ObsEdge>,
}

struct Subtree {
    alphabet: Alphabet,
    nodes: Vec<ActionNode>,
    root: Option<usize>,
    root_utility: f64,
    halt_utility: f64,
}

impl Subtree {
    fn build(
        env: &dyn SemiDistribution,
        beta: &dyn SemiDistribution,
        utility: &UtilityFunction,
        start: &History,
        unfinished: UnfinishedRule,
        limits: PlanningLimits,
    ) -> Result<Self, OptimizerError> {
        // reuse the planner's validation and capacity arithmetic
        let q = ValueQuery {
            environment: env,
            policy: None,
            utility,
            start,
            unfinished,
            limits,
        };
        let _ = planning::optimal_value(&q)?;
        let steps = utility.horizon() - start.completed_steps();
        let halt_utility = match unfinished {
            UnfinishedRule::Zero => 0.0,
            UnfinishedRule::Constant(c) => c,
        };
        let mut tree = Subtree {
            alphabet: env.alphabet(),
            nodes: Vec::new(),
            root: None,
            root_utility: 0.0,
            halt_utility,
        };
        if steps == 0 {
            tree.root_utility = utility.eval(start).map_err(PlanError::from)?;
            return Ok(tree);
        }
        let root = tree.grow(env, beta, utility, start, steps)?;
        tree.root = Some(root);
        Ok(tree)
    }

    fn grow(
        &mut self,
        env: &dyn SemiDistribution,
        beta: &dyn SemiDistribution,
        utility: &UtilityFunction,
        h: &History,
        steps: usize,
    ) -> Result<usize, OptimizerError> {
        let alphabet = self.alphabet;
        let beta_row = beta.dist_at(h);
        let mut edges = Vec::with_capacity(alphabet.size());
        for a in alphabet.symbols() {
            let ha = h.child(a);
            let env_row = env.dist_at(&ha);
            let mut children = Vec::with_capacity(alphabet.size());
            for o in alphabet.symbols() {
                let hao = ha.child(o);
                if steps == 1 {
                    children.push(Child::Leaf(utility.eval(&hao).map_err(PlanError::from)?));
                } else {
                    let idx = self.grow(env, beta, utility, &hao, steps - 1)?;
                    children.push(Child::Node(idx));
                }
            }
            edges.push(ObsEdge {
                env: env_row,
                children,
            });
        }
        self.nodes.push(ActionNode {
            context: h.symbols().to_vec(),
            beta: beta_row,
            edges,
        });
        Ok(self.nodes.len() - 1)
    }

    /// One soft backward pass at temperature λ.
    fn soft_pass(&self, lambda: f64) -> SoftResult {
        let mut rows = HashMap::new();
        let (expected_value, expected_kl) = match self.root {
            None => (self.root_utility, 0.0),
            Some(root) => self.soft_node(root, lambda, &mut rows),
        };
        SoftResult {
            rows,
            expected_value,
            expected_kl,
        }
    }

    /// Returns (expected utility, expected KL) of the soft policy from
    /// this node down, filling `rows` along the way.
    fn soft_node(
        &self,
        idx: usize,
        lambda: f64,
        rows: &mut HashMap<Vec<Symbol>, Vec<f64>>,
    ) -> (f64, f64) {
        let node = &self.nodes[idx];
        let k = self.alphabet.size();
        let mut q = vec![0.0; k];
        let mut child_kl = vec![0.0; k];
        for (a, edge) in node.edges.iter().enumerate() {
            let mut value = 0.0;
            let mut kl = 0.0;
            let mut mass = 0.0;
            for (o, child) in edge.children.iter().enumerate() {
                let po = edge.env[o];
                if po == 0.0 {
                    continue;
                }
                mass += po;
                match child {
                    Child::Leaf(u) => value += po * u,
                    Child::Node(c) => {
                        let (cv, ckl) = self.soft_node(*c, lambda, rows);
                        value += po * cv;
                        kl += po * ckl;
                    }
                }
            }
            q[a] = value + (1.0 - mass) * self.halt_utility;
            child_kl[a] = kl;
        }
        // soft reweighting of the base row, computed max-shifted
        let mut shift = f64::NEG_INFINITY;
        for a in 0..k {
            if node.beta[a] > 0.0 {
                shift = shift.max(q[a] / lambda);
            }
        }
        if shift == f64::NEG_INFINITY {
            // the base policy halts here; so does any finite-KL policy
            rows.insert(node.context.clone(), vec![0.0; k]);
            return (self.halt_utility, 0.0);
        }
        let mut z = 0.0;
        let mut weights = vec![0.0; k];
        for a in 0..k {
            if node.beta[a] > 0.0 {
                let w = node.beta[a] * ((q[a] / lambda) - shift).exp();
                weights[a] = w;
                z += w;
            }
        }
        let row: Vec<f64> = weights.iter().map(|w| w / z).collect();
        let mut value = 0.0;
        let mut kl = 0.0;
        for a in 0..k {
            let pa = row[a];
            if pa == 0.0 {
                continue;
            }
            value += pa * q[a];
            kl += pa * ((pa / node.beta[a]).ln() + child_kl[a]);
        }
        rows.insert(node.context.clone(), row);
        (value, kl)
    }

    fn base_rows(&self) -> HashMap<Vec<Symbol>, Vec<f64>> {
        self.nodes
            .iter()
            .map(|n| (n.context.clone(), n.beta.clone()))
            .collect()
    }
}

struct SoftResult {
    rows: HashMap<Vec<Symbol>, Vec<f64>>,
    #[allow(dead_code)]
    expected_value: f64,
    expected_kl: f64,
}

// ---------------------------------------------------------------------------
// KL-budgeted optimization
// ---------------------------------------------------------------------------

/// Maximize expected utility subject to a lifetime KL budget (nats)
/// against `beta`, certified against the max-over-observations penalty.
pub fn kl_constrained_optimize(
    env: &dyn SemiDistribution,
    beta: &dyn SemiDistribution,
    utility: &UtilityFunction,
    start: &History,
    budget_nats: f64,
    unfinished: UnfinishedRule,
    limits: PlanningLimits,
) -> Result<ConstrainedSolution, OptimizerError> {
    if budget_nats < 0.0 || !budget_nats.is_finite() {
        return Err(OptimizerError::NegativeBudget(budget_nats));
    }
    let m = utility.horizon();
    let tree = Subtree::build(env, beta, utility, start, unfinished, limits)?;

    let base_solution = |tree: &Subtree| -> Result<ConstrainedSolution, OptimizerError> {
        let policy = TabularPolicy::new(env.alphabet(), tree.base_rows());
        let value = policy_value_of(env, &policy, utility, start, unfinished, limits)?;
        Ok(ConstrainedSolution {
            policy,
            achieved_value: value,
            achieved_constraint: 0.0,
            multiplier: None,
            certified: true,
        })
    };

    // budget 0: the base policy is the one feasible point (up to almost-
    // sure equality), deficiency and all
    if budget_nats == 0.0 {
        return base_solution(&tree);
    }

    // constraint slack: the greedy optimum may already fit
    let qopt = ValueQuery {
        environment: env,
        policy: None,
        utility,
        start,
        unfinished,
        limits,
    };
    let greedy = planning::extract_optimal_policy(&qopt)?;
    let vstar = planning::optimal_value(&qopt)?;
    let greedy_kl = divergence::lifetime_kl(&greedy, beta, start, m, limits)?.value;
    if greedy_kl <= budget_nats + FEASIBILITY_TOL {
        let rows = greedy
            .choices()
            .iter()
            .map(|(ctx, &a)| {
                let mut row = vec![0.0; env.alphabet().size()];
                row[a as usize] = 1.0;
                (ctx.clone(), row)
            })
            .collect();
        return Ok(ConstrainedSolution {
            policy: TabularPolicy::new(env.alphabet(), rows),
            achieved_value: vstar,
            achieved_constraint: greedy_kl.max(0.0),
            multiplier: None,
            certified: true,
        });
    }

    // phase 1: bisect λ so the expected lifetime KL meets the budget
    let expected_kl_at = |lambda: f64| tree.soft_pass(lambda).expected_kl;
    let lambda = if expected_kl_at(LAMBDA_MIN) <= budget_nats {
        LAMBDA_MIN
    } else if expected_kl_at(LAMBDA_MAX) > budget_nats {
        // even the most conservative soft policy overshoots (deficient
        // base row somewhere): the base policy is the sound answer
        return base_solution(&tree);
    } else {
        let mut lo = LAMBDA_MIN; // expected KL above budget
        let mut hi = LAMBDA_MAX; // expected KL at or below budget
        let mut iters = 0;
        loop {
            let mid = (lo.ln() * 0.5 + hi.ln() * 0.5).exp();
            let e = expected_kl_at(mid);
            if e > budget_nats {
                lo = mid;
            } else {
                hi = mid;
            }
            iters += 1;
            if (e - budget_nats).abs() <= BUDGET_TOL * budget_nats.max(1.0)
                || (hi / lo - 1.0).abs() < 1e-14
            {
                break hi;
            }
            if iters >= MAX_BISECT_ITERS {
                return Err(OptimizerError::NoConvergence(MAX_BISECT_ITERS));
            }
        }
    };

    // phase 2: certify against the max-over-observations penalty,
    // raising λ until it passes
    let solution_at = |lambda: f64| -> Result<(TabularPolicy, f64), OptimizerError> {
        let soft = tree.soft_pass(lambda);
        let policy = TabularPolicy::new(env.alphabet(), soft.rows);
        let max_kl = divergence::lifetime_kl(&policy, beta, start, m, limits)?.value;
        Ok((policy, max_kl))
    };
    let (mut policy, mut max_kl) = solution_at(lambda)?;
    let mut final_lambda = lambda;
    if max_kl > budget_nats + FEASIBILITY_TOL {
        let mut lo = lambda;
        let mut hi = lambda;
        let mut pass = None;
        for _ in 0..64 {
            hi *= 4.0;
            let (p, kl) = solution_at(hi)?;
            if kl <= budget_nats + FEASIBILITY_TOL {
                pass = Some((p, kl));
                break;
            }
            lo = hi;
        }
        let Some((mut ppass, mut kpass)) = pass else {
            // the max-KL floor sits above the budget (deficient base):
            // fall back to the base policy
            return base_solution(&tree);
        };
        for _ in 0..MAX_BISECT_ITERS {
            if (kpass - budget_nats).abs() <= BUDGET_TOL * budget_nats.max(1.0)
                || (hi / lo - 1.0).abs() < 1e-14
            {
                break;
            }
            let mid = (lo.ln() * 0.5 + hi.ln() * 0.5).exp();
            let (p, kl) = solution_at(mid)?;
            if kl <= budget_nats + FEASIBILITY_TOL {
                hi = mid;
                ppass = p;
                kpass = kl;
            } else {
                lo = mid;
            }
        }
        policy = ppass;
        max_kl = kpass;
        final_lambda = hi;
    }

    let value = policy_value_of(env, &policy, utility, start, unfinished, limits)?;
    debug_assert!(value <= vstar + 1e-9);
    Ok(ConstrainedSolution {
        policy,
        achieved_value: value,
        achieved_constraint: max_kl.max(0.0),
        multiplier: Some(final_lambda),
        certified: max_kl <= budget_nats + FEASIBILITY_TOL,
    })
}

fn policy_value_of(
    env: &dyn SemiDistribution,
    policy: &dyn SemiDistribution,
    utility: &UtilityFunction,
    start: &History,
    unfinished: UnfinishedRule,
    limits: PlanningLimits,
) -> Result<f64, OptimizerError> {
    Ok(planning::policy_value(&ValueQuery {
        environment: env,
        policy: Some(policy),
        utility,
        start,
        unfinished,
        limits,
    })?)
}

// ---------------------------------------------------------------------------
// TVD-budgeted optimization (brute force)
// ---------------------------------------------------------------------------

/// Points per simplex coordinate and the policy-combination cap.
#[derive(Debug, Clone, Copy)]
pub struct GridSettings {
    pub resolution: usize,
    pub max_combos: u64,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            resolution: 100,
            max_combos: 4_000_000,
        }
    }
}

/// All grid rows on the (k-1)-simplex at the given resolution,
/// lexicographic.
pub fn simplex_grid(k: usize, resolution: usize) -> Vec<Vec<f64>> {
    let r = resolution as f64;
    match k {
        2 => (0..=resolution)
            .map(|i| vec![i as f64 / r, (resolution - i) as f64 / r])
            .collect(),
        3 => {
            let mut out = Vec::new();
            for i in 0..=resolution {
                for j in 0..=(resolution - i) {
                    out.push(vec![
                        i as f64 / r,
                        j as f64 / r,
                        (resolution - i - j) as f64 / r,
                    ]);
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

/// Maximize expected utility over the dense policy grid subject to the
/// lifetime TVD budget. Tiny instances only; the combination cap refuses
/// anything larger. Ties keep the first grid point in enumeration order.
pub fn tvd_constrained_optimize(
    env: &dyn SemiDistribution,
    beta: &dyn SemiDistribution,
    utility: &UtilityFunction,
    start: &History,
    budget: f64,
    settings: GridSettings,
    limits: PlanningLimits,
) -> Result<ConstrainedSolution, OptimizerError> {
    if budget < 0.0 {
        return Err(OptimizerError::NegativeBudget(budget));
    }
    let _ = limits;
    let k = env.alphabet().size();
    if !(2..=3).contains(&k) {
        return Err(OptimizerError::GridAlphabet(k));
    }
    let m = utility.horizon();
    let steps = m - start.completed_steps();
    let contexts = enumerate_action_contexts(env.alphabet(), start, steps);
    let grid = simplex_grid(k, settings.resolution);
    let combos = (grid.len() as u128)
        .checked_pow(contexts.len() as u32)
        .unwrap_or(u128::MAX);
    if combos > settings.max_combos as u128 {
        return Err(OptimizerError::GridCapacity {
            combos,
            cap: settings.max_combos,
        });
    }
    let eval = GridEvaluator::build(env, beta, utility, start, steps, &contexts)?;

    let mut best: Option<(Vec<usize>, f64, f64)> = None;
    let mut counter = vec![0usize; contexts.len()];
    loop {
        let rows: Vec<&[f64]> = counter.iter().map(|&i| grid[i].as_slice()).collect();
        let tvd = eval.tvd(&rows);
        if tvd <= budget + 1e-12 {
            let value = eval.value(&rows);
            if best.as_ref().map_or(true, |(_, bv, _)| value > *bv) {
                best = Some((counter.clone(), value, tvd));
            }
        }
        // odometer over the product grid
        let mut i = counter.len();
        loop {
            if i == 0 {
                let (idxs, value, tvd) =
                    best.expect("some grid point is feasible at any nonnegative budget");
                let rows = contexts
                    .iter()
                    .zip(&idxs)
                    .map(|(ctx, &gi)| (ctx.symbols().to_vec(), grid[gi].clone()))
                    .collect();
                return Ok(ConstrainedSolution {
                    policy: TabularPolicy::new(env.alphabet(), rows),
                    achieved_value: value,
                    achieved_constraint: tvd,
                    multiplier: None,
                    certified: true,
                });
            }
            i -= 1;
            counter[i] += 1;
            if counter[i] < grid.len() {
                break;
            }
            counter[i] = 0;
        }
    }
}

/// Flattened path tables for fast repeated policy evaluation on a fixed
/// tiny subtree. Requires a proper environment.
struct GridEvaluator {
    /// Complete paths as (context-index, action) pairs weighted by
    /// environment probability times utility.
    value_paths: Vec<(Vec<(usize, Symbol)>, f64)>,
    /// Per observation branch: action paths with the base policy's path
    /// probability.
    tvd_branches: Vec<Vec<(Vec<(usize, Symbol)>, f64)>>,
}

impl GridEvaluator {
    fn build(
        env: &dyn SemiDistribution,
        beta: &dyn SemiDistribution,
        utility: &UtilityFunction,
        start: &History,
        steps: usize,
        contexts: &[History],
    ) -> Result<Self, OptimizerError> {
        let index: HashMap<&[Symbol], usize> = contexts
            .iter()
            .enumerate()
            .map(|(i, h)| (h.symbols(), i))
            .collect();
        let k = env.alphabet().size();

        let mut stack: Vec<(History, Vec<(usize, Symbol)>, f64)> =
            vec![(start.clone(), Vec::new(), 1.0)];
        for _ in 0..steps {
            let mut next = Vec::new();
            for (h, path, w) in stack {
                let ci = index[h.symbols()];
                for a in env.alphabet().symbols() {
                    let ha = h.child(a);
                    let mut mass = 0.0;
                    for o in env.alphabet().symbols() {
                        let po = env.prob(&ha, o);
                        mass += po;
                        if po == 0.0 {
                            continue;
                        }
                        let mut p2 = path.clone();
                        p2.push((ci, a));
                        next.push((ha.child(o), p2, w * po));
                    }
                    if (mass - 1.0).abs() > 1e-9 {
                        return Err(OptimizerError::GridDeficientEnvironment);
                    }
                }
            }
            stack = next;
        }
        let mut value_paths = Vec::new();
        for (h, path, w) in stack {
            let u = utility.eval(&h).map_err(PlanError::from)?;
            value_paths.push((path, w * u));
        }

        let mut tvd_branches = Vec::new();
        for branch in divergence::enumerate_sequences(k, steps.saturating_sub(1)) {
            let mut paths = Vec::new();
            for actions in divergence::enumerate_sequences(k, steps) {
                let mut h = start.clone();
                let mut pairs = Vec::with_capacity(steps);
                let mut q = 1.0;
                for (level, &a) in actions.iter().enumerate() {
                    pairs.push((index[h.symbols()], a));
                    q *= beta.prob(&h, a);
                    if level + 1 < steps {
                        h = h.child(a).child(branch[level]);
                    }
                }
                paths.push((pairs, q));
            }
            tvd_branches.push(paths);
        }
        Ok(GridEvaluator {
            value_paths,
            tvd_branches,
        })
    }

    fn value(&self, rows: &[&[f64]]) -> f64 {
        let mut total = 0.0;
        for (path, w) in &self.value_paths {
            let mut p = *w;
            for &(ci, a) in path {
                p *= rows[ci][a as usize];
                if p == 0.0 {
                    break;
                }
            }
            total += p;
        }
        total
    }

    fn tvd(&self, rows: &[&[f64]]) -> f64 {
        let mut best = 0.0f64;
        for branch in &self.tvd_branches {
            let mut total = 0.0;
            for (path, q) in branch {
                let mut p = 1.0;
                for &(ci, a) in path {
                    p *= rows[ci][a as usize];
                    if p == 0.0 {
                        break;
                    }
                }
                if p > *q {
                    total += p - q;
                }
            }
            best = best.max(total);
        }
        best
    }
}

// ---------------------------------------------------------------------------
// Switch policies and the switch-bound experiment
// ---------------------------------------------------------------------------

/// Behave as `base`'s action stream until `trigger` has happened, as
/// `post` afterwards.
pub fn make_switch_policy(
    base: Arc<dyn SemiDistribution>,
    trigger: Event,
    post: Arc<dyn SemiDistribution>,
) -> SwitchModel {
    SwitchModel {
        base,
        trigger,
        post,
    }
}

/// Everything the switch-bound experiment measures.
#[derive(Debug, Clone)]
pub struct SwitchBoundReport {
    pub target_value: f64,
    pub achieved_value: f64,
    pub optimal_value: f64,
    pub measured_kl_nats: f64,
    pub delta_bits: u64,
    pub bound_nats: f64,
    pub slack_nats: f64,
    pub post_policy: Predictor,
    pub maximizing_observations: Vec<Symbol>,
}

/// Run the switch-bound experiment: starting from a history on which
/// `trigger` is unprecedented and happens at the final timestep, find a
/// post policy worth more than `target_value` against the mixture, wrap
/// the class with switch variants, and measure the switch policy's
/// lifetime KL against the augmented mixture next to the `Δ·ln 2` bound.
///
/// `post_override` skips the search; otherwise constant-symbol policies
/// are tried and the best must beat the target.
pub fn theorem1_bound_check(
    class: &Arc<ModelClass>,
    trigger: &Event,
    utility: &UtilityFunction,
    start: &History,
    target_value: f64,
    post_override: Option<Predictor>,
    unfinished: UnfinishedRule,
    limits: PlanningLimits,
) -> Result<SwitchBoundReport, OptimizerError> {
    let alphabet = class.alphabet();
    let t_now = start.completed_steps() + 1;
    let fresh = trigger.happens_at(start, t_now).unwrap_or(false)
        && trigger.unprecedented_at(start, t_now).unwrap_or(false);
    if !fresh {
        return Err(OptimizerError::TriggerNotFresh);
    }

    // candidate post policies are scored against the plain mixture; the
    // augmented mixture has the identical observation stream, so the
    // values transfer
    let base_env = MixtureDist::new(class.clone());
    let score = |post: &Predictor| -> Result<f64, OptimizerError> {
        policy_value_of(&base_env, post, utility, start, unfinished, limits)
    };
    let (post, plain_value) = match post_override {
        Some(p) => {
            let v = score(&p)?;
            (p, v)
        }
        None => {
            let mut best: Option<(Predictor, f64)> = None;
            for s in alphabet.symbols() {
                let cand = Predictor::Constant {
                    alphabet,
                    symbol: s,
                };
                let v = score(&cand)?;
                if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
                    best = Some((cand, v));
                }
            }
            best.expect("alphabet nonempty")
        }
    };
    if plain_value <= target_value {
        return Err(OptimizerError::InfeasibleTarget {
            target: target_value,
            best: plain_value,
        });
    }

    let aug = augment_with_switch_variants(class, trigger, &post)?;
    let xi_aug = MixtureDist::new(aug.class.clone());
    let m = utility.horizon();

    let achieved_value = policy_value_of(&xi_aug, &post, utility, start, unfinished, limits)?;
    let optimal_value = planning::optimal_value(&ValueQuery {
        environment: &xi_aug,
        policy: None,
        utility,
        start,
        unfinished,
        limits,
    })?;

    let switch_policy = make_switch_policy(
        Arc::new(MixtureDist::new(aug.class.clone())),
        trigger.clone(),
        Arc::new(post.clone()),
    );
    let report = divergence::lifetime_kl(&switch_policy, &xi_aug, start, m, limits)?;

    let bound_nats = aug.delta_bits as f64 * LN_2;
    Ok(SwitchBoundReport {
        target_value,
        achieved_value,
        optimal_value,
        measured_kl_nats: report.value,
        delta_bits: aug.delta_bits,
        bound_nats,
        slack_nats: bound_nats - report.value,
        post_policy: post,
        maximizing_observations: report.maximizing_observations,
    })
}

/// Grid-search reference maximizers for the KL-budgeted problem,
/// independent of the soft solver they are used to check.
pub mod oracle {
    use super::*;

    /// Dense grid over the single action-step simplex: the feasible
    /// maximizer of expected utility under the lifetime KL budget.
    /// `points` counts grid cells per simplex coordinate.
    pub fn kl_single_step_grid_max(
        env: &dyn SemiDistribution,
        beta: &dyn SemiDistribution,
        utility: &UtilityFunction,
        start: &History,
        budget_nats: f64,
        points: usize,
        limits: PlanningLimits,
    ) -> Result<f64, OptimizerError> {
        let m = utility.horizon();
        assert_eq!(
            start.completed_steps() + 1,
            m,
            "single-step oracle needs exactly one action step"
        );
        let mut best = f64::NEG_INFINITY;
        for row in simplex_grid(env.alphabet().size(), points) {
            let mut rows = HashMap::new();
            rows.insert(start.symbols().to_vec(), row);
            let policy = TabularPolicy::new(env.alphabet(), rows);
            let kl = divergence::lifetime_kl(&policy, beta, start, m, limits)?.value;
            if kl <= budget_nats + 1e-12 {
                let v = policy_value_of(env, &policy, utility, start, UnfinishedRule::Zero, limits)?;
                if v > best {
                    best = v;
                }
            }
        }
        Ok(best)
    }

    /// Staged product-grid refinement for multi-step instances: start
    /// with a coarse grid per context, keep the feasible incumbent,
    /// shrink the window around it, repeat. The total number of policy
    /// evaluations stays near `points_per_axis^contexts * stages`.
    pub fn kl_refined_grid_max(
        env: &dyn SemiDistribution,
        beta: &dyn SemiDistribution,
        utility: &UtilityFunction,
        start: &History,
        budget_nats: f64,
        points_per_axis: usize,
        stages: usize,
        limits: PlanningLimits,
    ) -> Result<f64, OptimizerError> {
        let k = env.alphabet().size();
        assert_eq!(k, 2, "refined oracle covers the binary alphabet");
        let m = utility.horizon();
        let steps = m - start.completed_steps();
        let contexts = enumerate_action_contexts(env.alphabet(), start, steps);
        let dims = contexts.len();

        // coordinates are P(symbol 1 | context)
        let mut center = vec![0.5f64; dims];
        let mut halfwidth = 0.5f64;
        let mut best = f64::NEG_INFINITY;
        for _ in 0..stages {
            let axis: Vec<Vec<f64>> = center
                .iter()
                .map(|&c| {
                    (0..points_per_axis)
                        .map(|i| {
                            let t = i as f64 / (points_per_axis - 1) as f64;
                            (c - halfwidth + 2.0 * halfwidth * t).clamp(0.0, 1.0)
                        })
                        .collect()
                })
                .collect();
            let mut counter = vec![0usize; dims];
            loop {
                let mut rows = HashMap::new();
                for (d, ctx) in contexts.iter().enumerate() {
                    let p1 = axis[d][counter[d]];
                    rows.insert(ctx.symbols().to_vec(), vec![1.0 - p1, p1]);
                }
                let policy = TabularPolicy::new(env.alphabet(), rows);
                let kl = divergence::lifetime_kl(&policy, beta, start, m, limits)?.value;
                if kl <= budget_nats + 1e-12 {
                    let v = policy_value_of(
                        env,
                        &policy,
                        utility,
                        start,
                        UnfinishedRule::Zero,
                        limits,
                    )?;
                    if v > best {
                        best = v;
                        center = (0..dims).map(|d| axis[d][counter[d]]).collect();
                    }
                }
                let mut i = dims;
                let done = loop {
                    if i == 0 {
                        break true;
                    }
                    i -= 1;
                    counter[i] += 1;
                    if counter[i] < points_per_axis {
                        break false;
                    }
                    counter[i] = 0;
                };
                if done {
                    break;
                }
            }
            halfwidth *= 2.5 / (points_per_axis - 1) as f64;
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::UtilityKind;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn limits() -> PlanningLimits {
        PlanningLimits::default()
    }

    #[test]
    fn budget_zero_returns_base() {
        let env = Predictor::bernoulli(0.5).unwrap();
        let beta = Predictor::bernoulli(0.2).unwrap();
        let u = UtilityFunction::new(2, UtilityKind::MeanActionMatches(1)).unwrap();
        let sol = kl_constrained_optimize(
            &env,
            &beta,
            &u,
            &History::empty(),
            0.0,
            UnfinishedRule::Zero,
            limits(),
        )
        .unwrap();
        assert!(sol.certified);
        assert_eq!(sol.achieved_constraint, 0.0);
        assert_close(sol.achieved_value, 0.2, 1e-12);
        let row = sol.policy.row_at(&History::empty()).unwrap();
        assert_close(row[1], 0.2, 1e-12);
    }

    #[test]
    fn slack_budget_returns_greedy_optimum() {
        let env = Predictor::bernoulli(0.5).unwrap();
        let beta = Predictor::bernoulli(0.2).unwrap();
        let u = UtilityFunction::new(2, UtilityKind::MeanActionMatches(1)).unwrap();
        // greedy always plays 1; each step costs ln(1/0.2)
        let need = 2.0 * (1.0f64 / 0.2).ln();
        let sol = kl_constrained_optimize(
            &env,
            &beta,
            &u,
            &History::empty(),
            need + 0.1,
            UnfinishedRule::Zero,
            limits(),
        )
        .unwrap();
        assert!(sol.certified);
        assert_close(sol.achieved_value, 1.0, 1e-12);
        assert!(sol.achieved_constraint <= need + 1e-9);
    }

    #[test]
    fn binding_budget_is_certified_and_spends_it() {
        // single action step: the soft family is the exact optimum and the
        // max over observations coincides with the expectation
        let env = Predictor::bernoulli(0.5).unwrap();
        let beta = Predictor::bernoulli(0.3).unwrap();
        let u = UtilityFunction::new(1, UtilityKind::MeanActionMatches(1)).unwrap();
        let budget = 0.2;
        let sol = kl_constrained_optimize(
            &env,
            &beta,
            &u,
            &History::empty(),
            budget,
            UnfinishedRule::Zero,
            limits(),
        )
        .unwrap();
        assert!(sol.certified);
        assert!(sol.achieved_constraint <= budget + FEASIBILITY_TOL);
        assert!(sol.achieved_value > 0.3 && sol.achieved_value < 1.0);
        assert_close(sol.achieved_constraint, budget, 1e-4);
        assert!(sol.multiplier.unwrap() > 0.0);
    }

    #[test]
    fn budget_sweep_is_monotone_and_feasible() {
        let env = Predictor::bernoulli(0.6).unwrap();
        let beta = Predictor::bernoulli(0.25).unwrap();
        let u = UtilityFunction::new(2, UtilityKind::MeanActionMatches(1)).unwrap();
        let mut last = -1.0;
        for budget in [0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 4.0] {
            let sol = kl_constrained_optimize(
                &env,
                &beta,
                &u,
                &History::empty(),
                budget,
                UnfinishedRule::Zero,
                limits(),
            )
            .unwrap();
            assert!(sol.certified);
            assert!(sol.achieved_constraint <= budget + FEASIBILITY_TOL);
            assert!(
                sol.achieved_value >= last - 1e-9,
                "value dropped at budget {budget}"
            );
            last = sol.achieved_value;
        }
    }

    #[test]
    fn deficient_base_falls_back_to_base() {
        // base halts with probability 1/2; any proper policy has KL at
        // least ln 2, so a small budget forces the base itself
        let a = Alphabet::binary();
        let env = Predictor::bernoulli(0.5).unwrap();
        let beta = Predictor::iid(a, crate::semidist::WeightRow::new(vec![1, 1], 2)).unwrap();
        let u = UtilityFunction::new(1, UtilityKind::MeanActionMatches(1)).unwrap();
        let sol = kl_constrained_optimize(
            &env,
            &beta,
            &u,
            &History::empty(),
            0.05,
            UnfinishedRule::Zero,
            limits(),
        )
        .unwrap();
        assert!(sol.certified);
        assert_eq!(sol.achieved_constraint, 0.0);
        let row = sol.policy.row_at(&History::empty()).unwrap();
        assert_close(row[0] + row[1], 0.5, 1e-12);
    }

    #[test]
    fn tvd_budget_zero_returns_base_row() {
        let env = Predictor::bernoulli(0.5).unwrap();
        let beta = Predictor::bernoulli(0.25).unwrap();
        let u = UtilityFunction::new(1, UtilityKind::MeanActionMatches(1)).unwrap();
        let sol = tvd_constrained_optimize(
            &env,
            &beta,
            &u,
            &History::empty(),
            0.0,
            GridSettings {
                resolution: 100,
                max_combos: 1_000_000,
            },
            limits(),
        )
        .unwrap();
        let row = sol.policy.row_at(&History::empty()).unwrap();
        assert_close(row[1], 0.25, 1e-12);
        assert_close(sol.achieved_value, 0.25, 1e-12);
    }

    #[test]
    fn tvd_budget_one_gives_deterministic_optimum() {
        let env = Predictor::bernoulli(0.5).unwrap();
        let beta = Predictor::bernoulli(0.25).unwrap();
        let u = UtilityFunction::new(1, UtilityKind::MeanActionMatches(1)).unwrap();
        let sol = tvd_constrained_optimize(
            &env,
            &beta,
            &u,
            &History::empty(),
            1.0,
            GridSettings {
                resolution: 100,
                max_combos: 1_000_000,
            },
            limits(),
        )
        .unwrap();
        assert_close(sol.achieved_value, 1.0, 1e-12);
    }

    #[test]
    fn tvd_increased_actions_are_v_optimal() {
        let env = Predictor::bernoulli(0.5).unwrap();
        let beta = Predictor::bernoulli(0.25).unwrap();
        let u = UtilityFunction::new(1, UtilityKind::MeanActionMatches(1)).unwrap();
        let start = History::empty();
        let sol = tvd_constrained_optimize(
            &env,
            &beta,
            &u,
            &start,
            0.3,
            GridSettings {
                resolution: 100,
                max_combos: 1_000_000,
            },
            limits(),
        )
        .unwrap();
        let q = ValueQuery {
            environment: &env,
            policy: None,
            utility: &u,
            start: &start,
            unfinished: UnfinishedRule::Zero,
            limits: limits(),
        };
        let row = sol.policy.row_at(&start).unwrap();
        for s in env.alphabet().symbols() {
            if row[s as usize] > beta.prob(&start, s) + 1e-12 {
                assert!(planning::is_v_optimal(&q, s).unwrap());
            }
        }
        assert_close(sol.achieved_constraint, 0.3, 1e-9);
    }

    #[test]
    fn switch_policy_boundaries() {
        let a = Alphabet::binary();
        let base: Arc<dyn SemiDistribution> = Arc::new(Predictor::bernoulli(0.5).unwrap());
        let post: Arc<dyn SemiDistribution> = Arc::new(Predictor::Constant {
            alphabet: a,
            symbol: 1,
        });
        let never = make_switch_policy(base.clone(), Event::never(), post.clone());
        assert_eq!(never.prob(&History::from([0, 0]), 1), 0.5);
        let always = make_switch_policy(base, Event::always(), post);
        assert_eq!(always.prob(&History::from([0, 0]), 1), 1.0);
    }
}
