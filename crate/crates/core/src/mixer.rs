//! The differentiable fixed-KL mixing operation.
//!
//! Given a proposed distribution `a`, a full-support base `b`, and a
//! target KL, find `α ∈ [0, 1]` with
//!
//! ```text
//! g(α) = KL(α·a + (1-α)·b  ‖  b) = target
//! ```
//!
//! `g` is convex, zero at `α = 0`, and nondecreasing on `[0, 1]`, so
//! bisection is unconditionally convergent. Targets beyond `g(1) =
//! KL(a‖b)` clamp to `α = 1`. The backward pass differentiates the root
//! implicitly — never through the bisection iterates:
//!
//! ```text
//! g'(α)      = Σ_x (a_x - b_x) · ln(q_x / b_x),   q = α·a + (1-α)·b
//! ∂g/∂a_x    = α · (ln(q_x / b_x) + 1)
//! dα/dtarget = 1 / g'(α)
//! dα/da_x    = -(∂g/∂a_x) / g'(α)
//! ```
//!
//! A per-episode budget ledger tracks the signed realized cost
//! `ln(policy(action)/base(action))` per action; the per-step target rule
//! squashes an activation through the logistic and scales by the
//! remaining budget.

use thiserror::Error;

/// Absolute tolerance on the achieved KL of the forward solve.
pub const FORWARD_TOL: f64 = 1e-9;
/// Iteration cap for the bisection (generous: the bracket collapses to
/// machine precision long before).
pub const MAX_ITERS: usize = 200;

#[derive(Debug, Error, PartialEq)]
pub enum MixerError {
    #[error("distribution must sum to 1 (got {0})")]
    NotNormalized(f64),
    #[error("entry {0} outside [0, 1]")]
    BadEntry(f64),
    #[error("base distribution must have full support (b[{0}] = 0)")]
    NoSupport(usize),
    #[error("target KL must be nonnegative and finite, got {0}")]
    BadTarget(f64),
    #[error("lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degenerate query: a = b, so g is identically zero")]
    Degenerate,
    #[error("gradient undefined at the boundary alpha = {0}")]
    BoundaryAlpha(f64),
    #[error("probability must be positive to enter the ledger, got {0}")]
    LedgerZeroProbability(f64),
}

/// A validated mixing query.
#[derive(Debug, Clone)]
pub struct MixQuery {
    pub proposed: Vec<f64>,
    pub base: Vec<f64>,
    pub target_kl: f64,
}

impl MixQuery {
    pub fn new(proposed: Vec<f64>, base: Vec<f64>, target_kl: f64) -> Result<Self, MixerError> {
        if proposed.len() != base.len() {
            return Err(MixerError::LengthMismatch(proposed.len(), base.len()));
        }
        for row in [&proposed, &base] {
            let mut sum = 0.0;
            for &p in row.iter() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(MixerError::BadEntry(p));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(MixerError::NotNormalized(sum));
            }
        }
        if let Some(i) = base.iter().position(|&b| b == 0.0) {
            return Err(MixerError::NoSupport(i));
        }
        if !(target_kl.is_finite() && target_kl >= 0.0) {
            return Err(MixerError::BadTarget(target_kl));
        }
        Ok(MixQuery {
            proposed,
            base,
            target_kl,
        })
    }
}

/// `KL(α a + (1-α) b ‖ b)` for arbitrary nonnegative `a` (the backward
/// finite-difference checks perturb `a` off the simplex).
pub fn mix_kl(proposed: &[f64], base: &[f64], alpha: f64) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in proposed.iter().zip(base) {
        let q = alpha * a + (1.0 - alpha) * b;
        if q > 0.0 {
            total += q * (q / b).ln();
        }
    }
    total
}

/// Outcome of the forward solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixSolution {
    pub alpha: f64,
    pub achieved_kl: f64,
    /// The target exceeded `KL(a‖b)` and `α` clamped to 1.
    pub clamped: bool,
}

/// Bisection for `g(α) = target`. Runs the bracket down to machine
/// precision so the root itself is exact enough for finite-difference
/// probes of the backward pass.
pub fn solve_alpha(q: &MixQuery) -> Result<MixSolution, MixerError> {
    Ok(solve_alpha_unchecked(&q.proposed, &q.base, q.target_kl))
}

/// The forward solve without the simplex validation; used by the
/// finite-difference checks that perturb single coordinates.
pub fn solve_alpha_unchecked(proposed: &[f64], base: &[f64], target: f64) -> MixSolution {
    if target <= 0.0 {
        return MixSolution {
            alpha: 0.0,
            achieved_kl: 0.0,
            clamped: false,
        };
    }
    let full = mix_kl(proposed, base, 1.0);
    if target >= full {
        return MixSolution {
            alpha: 1.0,
            achieved_kl: full,
            clamped: target > full,
        };
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut alpha = 0.5;
    let mut achieved = mix_kl(proposed, base, alpha);
    for _ in 0..MAX_ITERS {
        if achieved > target {
            hi = alpha;
        } else {
            lo = alpha;
        }
        let next = 0.5 * (lo + hi);
        if next == alpha || (achieved - target).abs() <= FORWARD_TOL && hi - lo < 1e-15 {
            break;
        }
        alpha = next;
        achieved = mix_kl(proposed, base, alpha);
    }
    MixSolution {
        alpha,
        achieved_kl: achieved,
        clamped: false,
    }
}

/// Gradients of the implicit root: `dα/dtarget` and per-symbol `dα/da`.
#[derive(Debug, Clone)]
pub struct MixGradients {
    pub d_alpha_d_target: f64,
    pub d_alpha_d_proposed: Vec<f64>,
}

/// Implicit differentiation at an interior solution `α ∈ (0, 1)`.
pub fn alpha_gradients(q: &MixQuery, alpha: f64) -> Result<MixGradients, MixerError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MixerError::BoundaryAlpha(alpha));
    }
    if q.proposed == q.base {
        return Err(MixerError::Degenerate);
    }
    let mut dg_dalpha = 0.0;
    let mut dg_da = Vec::with_capacity(q.proposed.len());
    for (&a, &b) in q.proposed.iter().zip(&q.base) {
        let mix = alpha * a + (1.0 - alpha) * b;
        let log_ratio = (mix / b).ln();
        dg_dalpha += (a - b) * log_ratio;
        dg_da.push(alpha * (log_ratio + 1.0));
    }
    Ok(MixGradients {
        d_alpha_d_target: 1.0 / dg_dalpha,
        d_alpha_d_proposed: dg_da.iter().map(|&g| -g / dg_dalpha).collect(),
    })
}

// ---------------------------------------------------------------------------
// Per-episode budget ledger
// ---------------------------------------------------------------------------

/// Running account of signed per-action KL costs against a fixed
/// per-episode allowance. Values, not shared state: `step` returns the
/// updated ledger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlBudgetLedger {
    pub total_budget: f64,
    pub spent: f64,
}

impl KlBudgetLedger {
    pub fn new(total_budget: f64) -> Self {
        KlBudgetLedger {
            total_budget,
            spent: 0.0,
        }
    }

    pub fn remaining(&self) -> f64 {
        self.total_budget - self.spent
    }

    /// Charge the realized action: `spent += ln(policy_prob/base_prob)`.
    /// A cheaper-than-base action refunds budget.
    pub fn step(&self, policy_prob: f64, base_prob: f64) -> Result<Self, MixerError> {
        for p in [policy_prob, base_prob] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(MixerError::LedgerZeroProbability(p));
            }
        }
        Ok(KlBudgetLedger {
            total_budget: self.total_budget,
            spent: self.spent + (policy_prob / base_prob).ln(),
        })
    }

    /// The per-step target rule: squash the activation through the
    /// logistic and scale by the remaining budget.
    pub fn step_target(&self, activation: f64) -> f64 {
        logistic(activation) * self.remaining()
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn q(a: Vec<f64>, b: Vec<f64>, t: f64) -> MixQuery {
        MixQuery::new(a, b, t).unwrap()
    }

    #[test]
    fn target_zero_gives_base() {
        let sol = solve_alpha(&q(vec![0.9, 0.1], vec![0.5, 0.5], 0.0)).unwrap();
        assert_eq!(sol.alpha, 0.0);
        assert_eq!(sol.achieved_kl, 0.0);
    }

    #[test]
    fn target_at_full_kl_gives_one() {
        let a = vec![0.9, 0.1];
        let b = vec![0.5, 0.5];
        let full = mix_kl(&a, &b, 1.0);
        let sol = solve_alpha(&q(a.clone(), b.clone(), full)).unwrap();
        assert_eq!(sol.alpha, 1.0);
        assert!(!sol.clamped);
        // and beyond it clamps
        let sol2 = solve_alpha(&q(a, b, full + 1.0)).unwrap();
        assert_eq!(sol2.alpha, 1.0);
        assert!(sol2.clamped);
    }

    #[test]
    fn forward_round_trip_half_target() {
        let a = vec![0.9, 0.1];
        let b = vec![0.5, 0.5];
        let target = 0.5 * mix_kl(&a, &b, 1.0);
        let sol = solve_alpha(&q(a.clone(), b.clone(), target)).unwrap();
        assert!((mix_kl(&a, &b, sol.alpha) - target).abs() <= FORWARD_TOL);
        assert!(sol.alpha > 0.0 && sol.alpha < 1.0);
    }

    #[test]
    fn g_is_nondecreasing_and_convexish() {
        let a = vec![0.7, 0.2, 0.1];
        let b = vec![0.2, 0.3, 0.5];
        let mut last = -1.0;
        for i in 0..=1000 {
            let alpha = i as f64 / 1000.0;
            let g = mix_kl(&a, &b, alpha);
            assert!(g >= last - 1e-15, "g dipped at {alpha}");
            last = g;
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let a = vec![0.8, 0.15, 0.05];
        let b = vec![0.4, 0.35, 0.25];
        let target = 0.4 * mix_kl(&a, &b, 1.0);
        let query = q(a.clone(), b.clone(), target);
        let sol = solve_alpha(&query).unwrap();
        let grads = alpha_gradients(&query, sol.alpha).unwrap();
        let h = 1e-6;

        let fd_target = (solve_alpha_unchecked(&a, &b, target + h).alpha
            - solve_alpha_unchecked(&a, &b, target - h).alpha)
            / (2.0 * h);
        let rel = (grads.d_alpha_d_target - fd_target).abs() / fd_target.abs();
        assert!(rel <= 1e-5, "d/dtarget rel err {rel}");

        for i in 0..a.len() {
            let mut up = a.clone();
            up[i] += h;
            let mut down = a.clone();
            down[i] -= h;
            let fd = (solve_alpha_unchecked(&up, &b, target).alpha
                - solve_alpha_unchecked(&down, &b, target).alpha)
                / (2.0 * h);
            let g = grads.d_alpha_d_proposed[i];
            let denom = fd.abs().max(1e-12);
            assert!(
                (g - fd).abs() / denom <= 1e-4,
                "d/da[{i}]: implicit {g} vs fd {fd}"
            );
        }
    }

    #[test]
    fn d_alpha_d_target_is_positive_interior() {
        let a = vec![0.9, 0.1];
        let b = vec![0.5, 0.5];
        for frac in [0.1, 0.5, 0.9] {
            let target = frac * mix_kl(&a, &b, 1.0);
            let query = q(a.clone(), b.clone(), target);
            let sol = solve_alpha(&query).unwrap();
            let grads = alpha_gradients(&query, sol.alpha).unwrap();
            assert!(grads.d_alpha_d_target > 0.0);
        }
    }

    #[test]
    fn degenerate_and_boundary_signals() {
        let same = q(vec![0.5, 0.5], vec![0.5, 0.5], 0.1);
        assert!(matches!(
            alpha_gradients(&same, 0.5),
            Err(MixerError::Degenerate)
        ));
        let query = q(vec![0.9, 0.1], vec![0.5, 0.5], 0.1);
        assert!(matches!(
            alpha_gradients(&query, 1.0),
            Err(MixerError::BoundaryAlpha(_))
        ));
    }

    #[test]
    fn query_validation() {
        assert!(MixQuery::new(vec![0.5, 0.4], vec![0.5, 0.5], 0.1).is_err());
        assert!(MixQuery::new(vec![0.5, 0.5], vec![1.0, 0.0], 0.1).is_err());
        assert!(MixQuery::new(vec![0.5, 0.5], vec![0.5, 0.5], -0.1).is_err());
    }

    #[test]
    fn ledger_accounting() {
        let ledger = KlBudgetLedger::new(10.0);
        // same probability: no charge
        let l1 = ledger.step(0.3, 0.3).unwrap();
        assert_eq!(l1.spent, 0.0);
        // twice the base probability: ln 2
        let l2 = l1.step(0.6, 0.3).unwrap();
        assert_close(l2.spent, std::f64::consts::LN_2, 1e-15);
        // cheaper than base: refund
        let l3 = l2.step(0.15, 0.3).unwrap();
        assert_close(l3.spent, 0.0, 1e-15);
        assert_close(l3.remaining(), 10.0, 1e-15);
        assert!(l3.step(0.0, 0.3).is_err());
    }

    #[test]
    fn step_target_scales_remaining_budget() {
        let ledger = KlBudgetLedger::new(8.0);
        assert_close(ledger.step_target(0.0), 4.0, 1e-12);
        assert!(ledger.step_target(10.0) > 7.99);
        assert!(ledger.step_target(-10.0) < 0.01);
    }
}
