//! Per-step and lifetime divergences between policies.
//!
//! The lifetime KL penalty between a proposed policy `π` and a base `β`,
//! continuing from an even-length history with `L` action steps to the
//! horizon, is
//!
//! ```text
//! max over observation sequences  Σ over action sequences
//!     [Π_t π(a_t | ctx_t)] · log ( Π_t π(a_t | ctx_t) / Π_t β(a_t | ctx_t) )
//! ```
//!
//! with one *global* observation sequence spliced into every action
//! branch's context — the adversarial observations may not be tailored
//! per action path. Policies may be semi-distributions: action sequences
//! that halt early carry no mass in the sum. `0·log(0/q) = 0`, and a
//! positive-mass action with `β`-probability 0 drives the divergence to
//! `+∞` (what the base policy rules out stays ruled out at any finite
//! budget).
//!
//! The expected variant replaces the max with the environment's
//! observation measure and decomposes additively over time (the
//! telescoping identity). The lifetime total variation distance uses the
//! same contexts and evaluates, per observation branch, the summed
//! positive part of the path-probability differences — the closed form of
//! the max over sequence subsets.

use crate::alphabet::Symbol;
use crate::history::History;
use crate::planning::PlanningLimits;
use crate::semidist::SemiDistribution;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DivergenceError {
    #[error("start history must end at an action boundary (even length), got {0}")]
    StartParity(usize),
    #[error("start history already has {steps_done} steps, horizon is {horizon}")]
    HorizonPassed { steps_done: usize, horizon: usize },
    #[error("enumeration of ~{nodes} nodes exceeds the cap of {cap}")]
    Capacity { nodes: u128, cap: u64 },
}

/// Outcome of a lifetime divergence computation.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    /// Nats (or TVD units); may be `+∞` for KL.
    pub value: f64,
    /// The observation sequence attaining the max (`o_t .. o_{m-1}`;
    /// empty when one action step remains).
    pub maximizing_observations: Vec<Symbol>,
    /// `(timestep, contribution)` along the maximizing branch; the
    /// contributions sum to `value`.
    pub per_step: Vec<(usize, f64)>,
}

/// `Σ_x p(x) ln(p(x)/q(x))` over symbols, with the usual conventions:
/// `p(x) = 0` contributes nothing, `p(x) > 0 = q(x)` gives `+∞`.
pub fn stepwise_kl(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return f64::INFINITY;
        }
        total += pi * (pi / qi).ln();
    }
    total
}

fn setup(
    start: &History,
    m: usize,
    k: usize,
    limits: &PlanningLimits,
) -> Result<usize, DivergenceError> {
    if start.len() % 2 != 0 {
        return Err(DivergenceError::StartParity(start.len()));
    }
    let done = start.completed_steps();
    if done > m {
        return Err(DivergenceError::HorizonPassed {
            steps_done: done,
            horizon: m,
        });
    }
    let steps = m - done;
    let nodes = (k as u128)
        .checked_pow((2 * steps).saturating_sub(1) as u32)
        .unwrap_or(u128::MAX);
    if nodes > limits.max_nodes as u128 {
        return Err(DivergenceError::Capacity {
            nodes,
            cap: limits.max_nodes,
        });
    }
    Ok(steps)
}

/// The paper-faithful lifetime KL: max over observation sequences of the
/// action-path KL. Returns the attaining branch and its per-step
/// breakdown.
pub fn lifetime_kl(
    pi: &dyn SemiDistribution,
    beta: &dyn SemiDistribution,
    start: &History,
    m: usize,
    limits: PlanningLimits,
) -> Result<DivergenceReport, DivergenceError> {
    let k = pi.alphabet().size();
    let steps = setup(start, m, k, &limits)?;
    let t0 = start.completed_steps() + 1;
    if steps == 0 {
        return Ok(DivergenceReport {
            value: 0.0,
            maximizing_observations: Vec::new(),
            per_step: Vec::new(),
        });
    }

    let mut best_value = f64::NEG_INFINITY;
    let mut best: Option<(Vec<Symbol>, Vec<f64>)> = None;
    let obs_len = steps - 1;
    for branch in enumerate_sequences(k, obs_len) {
        let (_, per_level) = action_tree_kl(pi, beta, start, &branch, 0, steps);
        let total: f64 = per_level.iter().sum();
        if total > best_value {
            best_value = total;
            best = Some((branch, per_level));
        }
        if best_value.is_infinite() {
            break;
        }
    }
    let (branch, per_level) = best.expect("at least one observation branch");
    Ok(DivergenceReport {
        value: best_value,
        maximizing_observations: branch,
        per_step: per_level
            .into_iter()
            .enumerate()
            .map(|(i, c)| (t0 + i, c))
            .collect(),
    })
}

/// Walks the action tree under a fixed observation branch. Returns the
/// total `π`-mass of complete action sequences and the per-level KL
/// contributions (mass-weighted log-ratios of complete paths).
fn action_tree_kl(
    pi: &dyn SemiDistribution,
    beta: &dyn SemiDistribution,
    h: &History,
    obs: &[Symbol],
    level: usize,
    steps: usize,
) -> (f64, Vec<f64>) {
    if level == steps {
        return (1.0, Vec::new());
    }
    let mut mass = 0.0;
    let mut per = vec![0.0; steps - level];
    for a in pi.alphabet().symbols() {
        let pa = pi.prob(h, a);
        if pa == 0.0 {
            continue;
        }
        let qa = beta.prob(h, a);
        let ha = h.child(a);
        let (cmass, cper) = if level + 1 < steps {
            let next = ha.child(obs[level]);
            action_tree_kl(pi, beta, &next, obs, level + 1, steps)
        } else {
            (1.0, Vec::new())
        };
        if cmass > 0.0 {
            let here = if qa == 0.0 {
                f64::INFINITY
            } else {
                pa * cmass * (pa / qa).ln()
            };
            per[0] += here;
        }
        for (slot, c) in per[1..].iter_mut().zip(&cper) {
            *slot += pa * c;
        }
        mass += pa * cmass;
    }
    (mass, per)
}

/// Expected lifetime KL: the observation max replaced by the
/// environment's measure. Interrupted paths (policy or environment
/// deficiency) carry no mass.
pub fn expected_lifetime_kl(
    pi: &dyn SemiDistribution,
    beta: &dyn SemiDistribution,
    env: &dyn SemiDistribution,
    start: &History,
    m: usize,
    limits: PlanningLimits,
) -> Result<f64, DivergenceError> {
    let k = pi.alphabet().size();
    let steps = setup(start, m, k, &limits)?;
    let (_, kl) = expected_tree_kl(pi, beta, env, start, steps);
    Ok(kl)
}

fn expected_tree_kl(
    pi: &dyn SemiDistribution,
    beta: &dyn SemiDistribution,
    env: &dyn SemiDistribution,
    h: &History,
    steps: usize,
) -> (f64, f64) {
    if steps == 0 {
        return (1.0, 0.0);
    }
    let mut mass = 0.0;
    let mut kl = 0.0;
    for a in pi.alphabet().symbols() {
        let pa = pi.prob(h, a);
        if pa == 0.0 {
            continue;
        }
        let qa = beta.prob(h, a);
        let lr = if qa == 0.0 {
            f64::INFINITY
        } else {
            (pa / qa).ln()
        };
        let ha = h.child(a);
        if steps == 1 {
            // no observation follows the last action
            mass += pa;
            kl += if lr.is_infinite() {
                f64::INFINITY
            } else {
                pa * lr
            };
            continue;
        }
        for o in env.alphabet().symbols() {
            let po = env.prob(&ha, o);
            if po == 0.0 {
                continue;
            }
            let (cmass, ckl) = expected_tree_kl(pi, beta, env, &ha.child(o), steps - 1);
            mass += pa * po * cmass;
            if cmass > 0.0 {
                kl += if lr.is_infinite() {
                    f64::INFINITY
                } else {
                    pa * po * cmass * lr
                };
            }
            kl += pa * po * ckl;
        }
    }
    (mass, kl)
}

/// Lifetime total variation distance: per observation branch, the summed
/// positive part of (π-path − β-path) over complete action sequences,
/// maximized over branches.
pub fn lifetime_tvd(
    pi: &dyn SemiDistribution,
    beta: &dyn SemiDistribution,
    start: &History,
    m: usize,
    limits: PlanningLimits,
) -> Result<DivergenceReport, DivergenceError> {
    let k = pi.alphabet().size();
    let steps = setup(start, m, k, &limits)?;
    if steps == 0 {
        return Ok(DivergenceReport {
            value: 0.0,
            maximizing_observations: Vec::new(),
            per_step: Vec::new(),
        });
    }
    let mut best_value = f64::NEG_INFINITY;
    let mut best_branch = Vec::new();
    for branch in enumerate_sequences(k, steps - 1) {
        let mut total = 0.0;
        for actions in enumerate_sequences(k, steps) {
            let mut p = 1.0;
            let mut q = 1.0;
            let mut h = start.clone();
            for (level, &a) in actions.iter().enumerate() {
                p *= pi.prob(&h, a);
                q *= beta.prob(&h, a);
                if level + 1 < steps {
                    h = h.child(a).child(branch[level]);
                }
                if p == 0.0 && q == 0.0 {
                    break;
                }
            }
            if p > q {
                total += p - q;
            }
        }
        if total > best_value {
            best_value = total;
            best_branch = branch;
        }
    }
    Ok(DivergenceReport {
        value: best_value,
        maximizing_observations: best_branch,
        per_step: Vec::new(),
    })
}

/// All length-`len` sequences over `k` symbols, lexicographic.
pub fn enumerate_sequences(k: usize, len: usize) -> Vec<Vec<Symbol>> {
    let mut out = Vec::with_capacity(k.pow(len as u32));
    let mut cur = vec![0u8; len];
    loop {
        out.push(cur.clone());
        let mut i = len;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if (cur[i] as usize) < k {
                break;
            }
            cur[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::semidist::Predictor;

    fn limits() -> PlanningLimits {
        PlanningLimits::default()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn stepwise_identical_is_zero() {
        assert_eq!(stepwise_kl(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
    }

    #[test]
    fn stepwise_no_triangle_values() {
        // τ = Bern(0) against β = Bern(ε/2) with ε = 0.1
        let tau = [1.0, 0.0];
        let beta = [0.95, 0.05];
        assert_close(stepwise_kl(&tau, &beta), -(0.95f64.ln()), 1e-15);
        assert_close(stepwise_kl(&tau, &beta), 0.051293, 1e-6);
        // support violation blows up
        assert_eq!(stepwise_kl(&[0.5, 0.5], &[1.0, 0.0]), f64::INFINITY);
    }

    #[test]
    fn lifetime_of_identical_policies_is_zero() {
        let p = Predictor::bernoulli(0.3).unwrap();
        let r = lifetime_kl(&p, &p, &History::empty(), 3, limits()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn deterministic_vs_uniform_two_steps() {
        let pi = Predictor::Constant {
            alphabet: Alphabet::binary(),
            symbol: 1,
        };
        let beta = Predictor::Uniform {
            alphabet: Alphabet::binary(),
        };
        let r = lifetime_kl(&pi, &beta, &History::empty(), 2, limits()).unwrap();
        assert_close(r.value, 2.0 * std::f64::consts::LN_2, 1e-12);
        // the breakdown covers both steps equally
        assert_eq!(r.per_step.len(), 2);
        assert_close(r.per_step[0].1, std::f64::consts::LN_2, 1e-12);
        assert_eq!(r.per_step[0].0, 1);
        // value equals the sum of contributions
        let sum: f64 = r.per_step.iter().map(|(_, c)| c).sum();
        assert_close(r.value, sum, 1e-9);
    }

    #[test]
    fn support_violation_is_infinite() {
        let pi = Predictor::bernoulli(0.5).unwrap();
        let beta = Predictor::Constant {
            alphabet: Alphabet::binary(),
            symbol: 0,
        };
        let r = lifetime_kl(&pi, &beta, &History::empty(), 2, limits()).unwrap();
        assert!(r.value.is_infinite());
    }

    #[test]
    fn max_dominates_expectation() {
        let a = Alphabet::binary();
        //observation-dependent policy: KL differs per branch
        let pi = Predictor::context_table(
            a,
            1,
            vec![
                crate::semidist::WeightRow::proper(vec![1, 3]),
                crate::semidist::WeightRow::proper(vec![3, 1]),
            ],
        )
        .unwrap();
        let beta = Predictor::Uniform { alphabet: a };
        let env = Predictor::bernoulli(0.3).unwrap();
        let max = lifetime_kl(&pi, &beta, &History::empty(), 3, limits())
            .unwrap()
            .value;
        let mean =
            expected_lifetime_kl(&pi, &beta, &env, &History::empty(), 3, limits()).unwrap();
        assert!(max >= mean - 1e-12, "max {max} < mean {mean}");
    }

    #[test]
    fn expected_kl_of_identical_policies_is_zero() {
        let p = Predictor::bernoulli(0.4).unwrap();
        let env = Predictor::bernoulli(0.6).unwrap();
        let v = expected_lifetime_kl(&p, &p, &env, &History::empty(), 3, limits()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn telescoping_identity_small_instance() {
        let a = Alphabet::binary();
        let pi = Predictor::context_table(
            a,
            1,
            vec![
                crate::semidist::WeightRow::proper(vec![2, 3]),
                crate::semidist::WeightRow::proper(vec![4, 1]),
            ],
        )
        .unwrap();
        let beta = Predictor::bernoulli(0.45).unwrap();
        let env = Predictor::bernoulli(0.7).unwrap();
        let m = 4;
        let start = History::empty();
        let full = expected_lifetime_kl(&pi, &beta, &env, &start, m, limits()).unwrap();
        // split after t = 2 (two pairs)
        let head = expected_lifetime_kl(&pi, &beta, &env, &start, 2, limits()).unwrap();
        let mut tail = 0.0;
        for pairs in enumerate_sequences(2, 4) {
            let mut h = start.clone();
            let mut w = 1.0;
            for (i, &s) in pairs.iter().enumerate() {
                w *= if i % 2 == 0 {
                    pi.prob(&h, s)
                } else {
                    env.prob(&h, s)
                };
                h = h.child(s);
            }
            if w == 0.0 {
                continue;
            }
            tail += w * expected_lifetime_kl(&pi, &beta, &env, &h, m, limits()).unwrap();
        }
        assert_close(full, head + tail, 1e-9);
    }

    #[test]
    fn tvd_one_step_deterministic_vs_uniform() {
        let pi = Predictor::Constant {
            alphabet: Alphabet::binary(),
            symbol: 1,
        };
        let beta = Predictor::Uniform {
            alphabet: Alphabet::binary(),
        };
        let r = lifetime_tvd(&pi, &beta, &History::empty(), 1, limits()).unwrap();
        assert_close(r.value, 0.5, 1e-15);
    }

    #[test]
    fn tvd_identical_zero_and_bounded() {
        let p = Predictor::bernoulli(0.3).unwrap();
        let r = lifetime_tvd(&p, &p, &History::empty(), 3, limits()).unwrap();
        assert_eq!(r.value, 0.0);
        let q = Predictor::Constant {
            alphabet: Alphabet::binary(),
            symbol: 0,
        };
        let r2 = lifetime_tvd(&q, &p, &History::empty(), 3, limits()).unwrap();
        assert!(r2.value >= 0.0 && r2.value <= 1.0 + 1e-12);
    }

    #[test]
    fn capacity_refusal() {
        let p = Predictor::bernoulli(0.5).unwrap();
        let tight = PlanningLimits { max_nodes: 4 };
        assert!(matches!(
            lifetime_kl(&p, &p, &History::empty(), 3, tight),
            Err(DivergenceError::Capacity { .. })
        ));
    }

    #[test]
    fn start_parity_checked() {
        let p = Predictor::bernoulli(0.5).unwrap();
        assert!(matches!(
            lifetime_kl(&p, &p, &History::from([0]), 2, limits()),
            Err(DivergenceError::StartParity(1))
        ));
    }
}
