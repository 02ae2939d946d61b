//! The built-in experiments.
//!
//! Each one measures a theorem-level property and registers a violation
//! when the property fails; the runner turns violations into exit code 2.

use crate::report::{fmt, ScenarioOutput};
use crate::scenario::ExperimentSpec;
use crate::suites;
use crate::{plot, report::Table};
use imitlab_core::alphabet::Alphabet;
use imitlab_core::divergence::{self, stepwise_kl};
use imitlab_core::event::EventError;
use imitlab_core::history::History;
use imitlab_core::mixture::{augment_with_switch_variants, MixtureDist, MixtureError};
use imitlab_core::optimizers::{
    self, kl_constrained_optimize, make_switch_policy, theorem1_bound_check, GridSettings,
    OptimizerError,
};
use imitlab_core::pessimist::{self, PessimistError};
use imitlab_core::planning::{self, PlanningLimits, UnfinishedRule, ValueQuery};
use imitlab_core::sampling::{rng_for, sample_symbol};
use imitlab_core::semidist::{Predictor, SemiDistribution};
use imitlab_core::toylang;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("bad parameter: {0}")]
    Config(String),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Pessimist(#[from] PessimistError),
    #[error(transparent)]
    Divergence(#[from] divergence::DivergenceError),
    #[error(transparent)]
    Plan(#[from] planning::PlanError),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error(transparent)]
    Event(#[from] EventError),
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ScenarioOutput, ExperimentError> {
    match spec {
        ExperimentSpec::NoTriangle { epsilon } => no_triangle(*epsilon),
        ExperimentSpec::SwitchBound {
            seed,
            count,
            prefix_steps,
        } => switch_bound(*seed, *count, prefix_steps),
        ExperimentSpec::TvdPathology {
            seed,
            count,
            resolution,
        } => tvd_pathology(*seed, *count, *resolution),
        ExperimentSpec::PessimistRetention {
            seed,
            delta,
            alpha_fraction,
            histories,
            history_length,
        } => pessimist_retention(*seed, *delta, *alpha_fraction, *histories, *history_length),
        ExperimentSpec::PessimistContainment {
            seed,
            count,
            policies_per_scenario,
        } => pessimist_containment(*seed, *count, *policies_per_scenario),
        ExperimentSpec::BudgetSweep {
            seed,
            budgets,
            budget,
        } => budget_sweep(*seed, budgets, *budget),
        ExperimentSpec::BudgetSpendProfile { seed, horizon } => {
            budget_spend_profile(*seed, *horizon)
        }
        ExperimentSpec::KraftAudit { alphabet } => kraft_audit(*alphabet),
        ExperimentSpec::SimplestEventScan {
            t_max_log2,
            check_to_log2,
        } => simplest_event_scan(*t_max_log2, *check_to_log2),
    }
}

fn limits() -> PlanningLimits {
    PlanningLimits::default()
}

// ---------------------------------------------------------------------------
// no-triangle
// ---------------------------------------------------------------------------

fn no_triangle(epsilon: f64) -> Result<ScenarioOutput, ExperimentError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(ExperimentError::Config(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    let mut out = ScenarioOutput::default();
    let p = epsilon.min(1.0) / 2.0;
    let pi = Predictor::bernoulli(p).unwrap();
    let beta = Predictor::bernoulli(p).unwrap();
    let tau = Predictor::bernoulli(0.0).unwrap();
    let start = History::empty();

    let pairs: [(&str, &Predictor, &Predictor); 3] =
        [("pi||beta", &pi, &beta), ("tau||beta", &tau, &beta), ("pi||tau", &pi, &tau)];
    let mut table = Table::new(
        "no_triangle",
        &["pair", "stepwise_kl_nats", "lifetime_kl_nats"],
    );
    let mut values = Vec::new();
    for (name, a, b) in pairs {
        let step = stepwise_kl(&a.dist_at(&start), &b.dist_at(&start));
        let life = divergence::lifetime_kl(a, b, &start, 1, limits())?.value;
        table.push(vec![name.into(), fmt(step), fmt(life)]);
        out.record("no-triangle", format!("kl_{name}"), step, "nats");
        values.push((step, life));
    }
    out.tables.push(table);

    let expected_tau = -(1.0 - p).ln();
    out.record("no-triangle", "expected_kl_tau||beta", expected_tau, "nats");
    out.check(values[0].0 == 0.0, "KL(pi||beta) must be exactly 0");
    out.check(
        (values[1].0 - expected_tau).abs() <= 1e-9,
        "KL(tau||beta) must equal -ln(1 - eps/2)",
    );
    out.check(
        values[2].0.is_infinite(),
        "KL(pi||tau) must be infinite (support violation)",
    );
    out.check(
        values[0].0 <= epsilon && values[1].0 <= epsilon,
        "both small divergences must fit under epsilon",
    );
    for (i, (step, life)) in values.iter().enumerate() {
        out.check(
            step == life || (step.is_infinite() && life.is_infinite()),
            format!("stepwise and one-step lifetime disagree for pair {i}"),
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// switch-bound
// ---------------------------------------------------------------------------

fn switch_bound(
    seed: u64,
    count: usize,
    prefix_steps: &[usize],
) -> Result<ScenarioOutput, ExperimentError> {
    if count == 0 || prefix_steps.is_empty() {
        return Err(ExperimentError::Config(
            "switch-bound needs count >= 1 and at least one prefix length".into(),
        ));
    }
    let mut out = ScenarioOutput::default();
    let mut table = Table::new(
        "switch_bound",
        &[
            "case",
            "prefix_pairs",
            "alphabet",
            "action_steps",
            "delta_bits",
            "bound_nats",
            "measured_kl_nats",
            "slack_nats",
            "target_value",
            "achieved_value",
            "optimal_value",
        ],
    );
    let mut min_slack = f64::INFINITY;
    for index in 0..count as u64 {
        let mut deltas = Vec::new();
        for &prefix in prefix_steps {
            let case = suites::switch_case(seed, index, prefix);
            let report = theorem1_bound_check(
                &case.class,
                &case.trigger,
                &case.utility,
                &case.start,
                case.target_value,
                None,
                UnfinishedRule::Zero,
                limits(),
            )?;
            out.check(
                report.slack_nats >= 0.0,
                format!("{}: measured lifetime KL exceeds the bound", case.label),
            );
            out.check(
                report.achieved_value > report.target_value,
                format!("{}: post policy does not beat the target", case.label),
            );
            min_slack = min_slack.min(report.slack_nats);
            deltas.push(report.delta_bits);
            table.push(vec![
                case.label.clone(),
                prefix.to_string(),
                case.alphabet.size().to_string(),
                case.action_steps.to_string(),
                report.delta_bits.to_string(),
                fmt(report.bound_nats),
                fmt(report.measured_kl_nats),
                fmt(report.slack_nats),
                fmt(report.target_value),
                fmt(report.achieved_value),
                fmt(report.optimal_value),
            ]);
        }
        out.check(
            deltas.windows(2).all(|w| w[0] == w[1]),
            format!("case {index}: wrapper overhead changed with the training prefix"),
        );
    }
    out.tables.push(table);
    out.record("switch-bound", "cases", count as f64, "scenarios");
    out.record("switch-bound", "min_slack", min_slack, "nats");
    Ok(out)
}

// ---------------------------------------------------------------------------
// tvd-pathology
// ---------------------------------------------------------------------------

fn tvd_pathology(
    seed: u64,
    count: usize,
    resolution: usize,
) -> Result<ScenarioOutput, ExperimentError> {
    if resolution < 100 {
        return Err(ExperimentError::Config(format!(
            "resolution must be at least 100, got {resolution}"
        )));
    }
    let mut out = ScenarioOutput::default();
    let mut table = Table::new(
        "tvd_pathology",
        &[
            "case",
            "budget",
            "achieved_value",
            "achieved_tvd",
            "raised_actions",
            "raised_all_v_optimal",
        ],
    );
    for index in 0..count as u64 {
        let case = suites::tvd_case(seed, index, resolution);
        let settings = GridSettings {
            resolution,
            max_combos: 4_000_000,
        };
        let sol = optimizers::tvd_constrained_optimize(
            &case.env,
            &case.beta,
            &case.utility,
            &case.start,
            case.budget,
            settings,
            limits(),
        )?;
        let q = ValueQuery {
            environment: &case.env,
            policy: None,
            utility: &case.utility,
            start: &case.start,
            unfinished: UnfinishedRule::Zero,
            limits: limits(),
        };
        let row = sol
            .policy
            .row_at(&case.start)
            .expect("solution covers the start context")
            .clone();
        let mut raised = Vec::new();
        let mut all_ok = true;
        for s in case.alphabet.symbols() {
            if row[s as usize] > case.beta.prob(&case.start, s) {
                raised.push(s);
                if !planning::is_v_optimal(&q, s)? {
                    all_ok = false;
                }
            }
        }
        out.check(
            all_ok,
            format!(
                "{}: an action gained probability without being V-optimal",
                case.label
            ),
        );
        out.check(
            sol.achieved_constraint <= case.budget + 1e-12,
            format!("{}: solution breaks its TVD budget", case.label),
        );
        table.push(vec![
            case.label.clone(),
            fmt(case.budget),
            fmt(sol.achieved_value),
            fmt(sol.achieved_constraint),
            format!("{raised:?}").replace(',', ";"),
            all_ok.to_string(),
        ]);
    }
    out.tables.push(table);
    out.record("tvd-pathology", "cases", count as f64, "instances");
    out.record(
        "tvd-pathology",
        "resolution",
        resolution as f64,
        "grid points per coordinate",
    );
    Ok(out)
}

// ---------------------------------------------------------------------------
// pessimist-retention
// ---------------------------------------------------------------------------

fn pessimist_retention(
    seed: u64,
    delta: f64,
    alpha_fraction: f64,
    histories: usize,
    history_length: usize,
) -> Result<ScenarioOutput, ExperimentError> {
    let mut out = ScenarioOutput::default();
    let (class, mu_index) = suites::retention_class();
    let prior = class.entries()[mu_index].log_prior.exp();
    let alpha = alpha_fraction * prior;
    let report = pessimist::retention_experiment(
        &class,
        mu_index,
        alpha,
        delta,
        histories,
        history_length,
        seed,
    )?;

    let half_width = (report.interval95.1 - report.interval95.0) / 2.0;
    out.record("pessimist-retention", "alpha", alpha, "posterior fraction");
    out.record("pessimist-retention", "delta", delta, "probability");
    out.record(
        "pessimist-retention",
        "retention_frequency",
        report.frequency,
        "probability",
    );
    out.record(
        "pessimist-retention",
        "interval95_low",
        report.interval95.0,
        "probability",
    );
    out.record(
        "pessimist-retention",
        "interval95_high",
        report.interval95.1,
        "probability",
    );
    out.record(
        "pessimist-retention",
        "threshold",
        1.0 - delta - half_width,
        "probability",
    );

    let mut table = Table::new(
        "retention",
        &["histories", "length", "retained", "frequency", "ci_low", "ci_high"],
    );
    table.push(vec![
        report.num_histories.to_string(),
        report.history_length.to_string(),
        report.retained.to_string(),
        fmt(report.frequency),
        fmt(report.interval95.0),
        fmt(report.interval95.1),
    ]);
    out.tables.push(table);

    // exit-step histogram over the non-retained histories
    let mut buckets = vec![0usize; 11];
    for &step in &report.first_exit_prefix {
        let b = (step * 10 / history_length.max(1)).min(10);
        buckets[b] += 1;
    }
    let bars: Vec<(String, f64)> = buckets
        .iter()
        .enumerate()
        .map(|(i, &c)| (format!("{}%", i * 10), c as f64))
        .collect();
    out.plots.push(crate::report::Plot {
        name: "retention_exits".into(),
        svg: plot::bar_plot(
            "first exit from the top set (fraction of history elapsed)",
            "position of first exit",
            "histories",
            &bars,
        ),
    });

    out.check(
        report.frequency >= 1.0 - delta - half_width,
        format!(
            "retention {} fell below 1-delta-halfwidth = {}",
            report.frequency,
            1.0 - delta - half_width
        ),
    );
    Ok(out)
}

// ---------------------------------------------------------------------------
// pessimist-containment
// ---------------------------------------------------------------------------

fn pessimist_containment(
    seed: u64,
    count: usize,
    policies: usize,
) -> Result<ScenarioOutput, ExperimentError> {
    let mut out = ScenarioOutput::default();
    let mut table = Table::new(
        "containment",
        &[
            "case",
            "contexts",
            "contexts_with_mu",
            "pointwise_violations",
            "policies",
            "kl_ordering_failures",
            "strictness_failures",
        ],
    );
    for index in 0..count as u64 {
        let case = suites::containment_case(seed, index);
        let mut ordering_failures = 0;
        let mut strict_failures = 0;
        let mut pointwise = 0;
        let mut contexts = 0;
        let mut with_mu = 0;
        for j in 0..policies as u64 {
            let pi = suites::containment_policy(seed, index, j, case.alphabet);
            let report = pessimist::containment_check(
                &pi,
                &case.class,
                case.alpha,
                case.mu_index,
                &case.start,
                case.horizon,
                limits(),
            )?;
            if j == 0 {
                pointwise = report.pointwise_violations.len();
                contexts = report.contexts_checked;
                with_mu = report.contexts_with_mu_in_top_set;
            }
            if !report.kl_ordering_holds {
                ordering_failures += 1;
            }
            let equal = report.kl_pi_vs_pessimist.value == report.kl_pi_vs_mu.value;
            if equal && !report.top_set_always_singleton_mu {
                strict_failures += 1;
            }
            if report.top_set_always_singleton_mu && !equal {
                strict_failures += 1;
            }
        }
        out.check(
            pointwise == 0,
            format!("{}: pessimist exceeded the demonstrator pointwise", case.label),
        );
        out.check(
            ordering_failures == 0,
            format!("{}: KL(pi||nu_alpha) < KL(pi||mu) for some policy", case.label),
        );
        out.check(
            strict_failures == 0,
            format!(
                "{}: KL equality without a singleton top set (or vice versa)",
                case.label
            ),
        );
        table.push(vec![
            case.label.clone(),
            contexts.to_string(),
            with_mu.to_string(),
            pointwise.to_string(),
            policies.to_string(),
            ordering_failures.to_string(),
            strict_failures.to_string(),
        ]);
    }
    out.tables.push(table);
    out.record("pessimist-containment", "cases", count as f64, "scenarios");
    out.record(
        "pessimist-containment",
        "policies_per_case",
        policies as f64,
        "policies",
    );
    Ok(out)
}

// ---------------------------------------------------------------------------
// budget-sweep
// ---------------------------------------------------------------------------

fn budget_sweep(
    _seed: u64,
    budgets: &[f64],
    single: Option<f64>,
) -> Result<ScenarioOutput, ExperimentError> {
    let budgets: Vec<f64> = match single {
        Some(b) => vec![b],
        None => budgets.to_vec(),
    };
    if budgets.is_empty() {
        return Err(ExperimentError::Config("no budgets given".into()));
    }
    let mut out = ScenarioOutput::default();
    let (env, beta, utility) = suites::budget_sweep_instance();
    let start = History::empty();
    let mut table = Table::new(
        "budget_sweep",
        &[
            "budget_nats",
            "achieved_value",
            "achieved_kl_nats",
            "multiplier",
            "certified",
        ],
    );
    let mut series = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &budget in &budgets {
        let sol = kl_constrained_optimize(
            &env,
            &beta,
            &utility,
            &start,
            budget,
            UnfinishedRule::Zero,
            limits(),
        )?;
        out.check(
            sol.certified && sol.achieved_constraint <= budget + 1e-9,
            format!("budget {budget}: solution not certified feasible"),
        );
        out.check(
            sol.achieved_value >= last - 1e-9,
            format!("budget {budget}: value decreased along the sweep"),
        );
        last = sol.achieved_value;
        series.push((budget, sol.achieved_value));
        table.push(vec![
            fmt(budget),
            fmt(sol.achieved_value),
            fmt(sol.achieved_constraint),
            sol.multiplier.map(fmt).unwrap_or_else(|| "-".into()),
            sol.certified.to_string(),
        ]);
    }
    out.tables.push(table);
    out.plots.push(crate::report::Plot {
        name: "value_vs_budget".into(),
        svg: plot::line_plot(
            "certified value against the lifetime KL budget",
            "budget (nats)",
            "expected utility",
            &[("value".to_string(), series)],
        ),
    });
    out.record("budget-sweep", "budgets", budgets.len() as f64, "points");
    out.record("budget-sweep", "max_value", last, "utility");
    Ok(out)
}

// ---------------------------------------------------------------------------
// budget-spend-profile
// ---------------------------------------------------------------------------

fn budget_spend_profile(seed: u64, horizon: usize) -> Result<ScenarioOutput, ExperimentError> {
    if horizon < 2 {
        return Err(ExperimentError::Config("horizon must be at least 2".into()));
    }
    let mut out = ScenarioOutput::default();
    let case = suites::profile_case();
    let aug = augment_with_switch_variants(&case.class, &case.trigger, &case.post)?;
    let xi: Arc<dyn SemiDistribution> = Arc::new(MixtureDist::new(aug.class.clone()));
    let switch_policy = make_switch_policy(
        xi.clone(),
        case.trigger.clone(),
        Arc::new(case.post.clone()),
    );

    let mut rng = rng_for(seed, 0);
    let mut h = History::empty();
    let mut rows = Vec::new();
    let mut cumulative = 0.0;
    let mut trigger_step: Option<usize> = None;
    for t in 1..=horizon {
        if case.trigger.has_happened_in(&h) && trigger_step.is_none() {
            trigger_step = Some(t);
        }
        let pi_row = switch_policy.dist_at(&h);
        let xi_row = xi.dist_at(&h);
        let step_kl = stepwise_kl(&pi_row, &xi_row);
        cumulative += step_kl;
        let action = sample_symbol(&switch_policy, &h, &mut rng)
            .ok_or_else(|| ExperimentError::Config("policy halted mid-trajectory".into()))?;
        h = h.child(action);
        let obs = sample_symbol(xi.as_ref(), &h, &mut rng)
            .ok_or_else(|| ExperimentError::Config("environment halted mid-trajectory".into()))?;
        h = h.child(obs);
        rows.push((t, action, obs, step_kl, cumulative));
    }
    let total = cumulative;
    let mut table = Table::new(
        "budget_spend",
        &[
            "timestep",
            "phase",
            "action",
            "observation",
            "step_kl_nats",
            "cumulative_nats",
            "cumulative_share",
        ],
    );
    let mut bars = Vec::new();
    for (t, action, obs, step_kl, cum) in &rows {
        let phase = match trigger_step {
            Some(ts) if *t == ts => "switch",
            Some(ts) if *t > ts => "post",
            _ => "pre",
        };
        table.push(vec![
            t.to_string(),
            phase.into(),
            action.to_string(),
            obs.to_string(),
            fmt(*step_kl),
            fmt(*cum),
            fmt(if total > 0.0 { cum / total } else { 0.0 }),
        ]);
        bars.push((t.to_string(), *step_kl));
    }
    out.tables.push(table);
    out.plots.push(crate::report::Plot {
        name: "budget_spend_profile".into(),
        svg: plot::bar_plot(
            "per-step KL cost of the switch policy along the realized run",
            "timestep",
            "step KL (nats)",
            &bars,
        ),
    });

    match trigger_step {
        None => out.check(false, "the trigger never fired within the horizon"),
        Some(ts) => {
            let through_switch: f64 = rows
                .iter()
                .filter(|(t, ..)| *t <= ts)
                .map(|(.., kl, _)| kl)
                .sum();
            let share = through_switch / total;
            out.record("budget-spend-profile", "trigger_step", ts as f64, "timestep");
            out.record("budget-spend-profile", "total_kl", total, "nats");
            out.record(
                "budget-spend-profile",
                "share_at_first_post_step",
                share,
                "fraction",
            );
            out.record(
                "budget-spend-profile",
                "delta_bits",
                aug.delta_bits as f64,
                "bits",
            );
            out.check(
                share >= 0.9,
                format!("only {share} of the KL cost landed at or before the switch step"),
            );
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// kraft-audit
// ---------------------------------------------------------------------------

fn kraft_audit(alphabet_size: usize) -> Result<ScenarioOutput, ExperimentError> {
    let alphabet = Alphabet::new(alphabet_size)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let mut out = ScenarioOutput::default();
    let total = toylang::kraft_total(&alphabet);
    let max_len = toylang::max_program_length(&alphabet);
    out.record("kraft-audit", "kraft_total", total, "probability");
    out.record(
        "kraft-audit",
        "kraft_total_error",
        (total - 1.0).abs(),
        "probability",
    );
    out.record("kraft-audit", "max_program_bits", max_len as f64, "bits");

    let mut table = Table::new("kraft_sum", &["depth_bits", "kraft_sum"]);
    let mut last = 0.0;
    let mut monotone = true;
    for depth in [0u64, 3, 6, 9, 12, 16, 24, 48, 96, 192, 384, max_len] {
        let s = toylang::kraft_sum(&alphabet, depth);
        if s < last {
            monotone = false;
        }
        last = s;
        table.push(vec![depth.to_string(), fmt(s)]);
    }
    out.tables.push(table);

    // exhaustive checks at small depth: prefix-freeness and enumerated
    // mass agreeing with the analytic accounting
    let depth = 12;
    let members = toylang::members_up_to(&alphabet, depth);
    let mut prefix_free = true;
    for (i, p) in members.iter().enumerate() {
        for q in members.iter().skip(i + 1) {
            if p.is_prefix_of(q) || q.is_prefix_of(p) {
                prefix_free = false;
            }
        }
    }
    let enumerated: f64 = members.iter().map(|p| 0.5f64.powi(p.len() as i32)).sum();
    let analytic = toylang::kraft_sum(&alphabet, depth as u64);
    out.record(
        "kraft-audit",
        "programs_up_to_12_bits",
        members.len() as f64,
        "programs",
    );
    out.record(
        "kraft-audit",
        "enumerated_mass_12_bits",
        enumerated,
        "probability",
    );

    out.check(
        (total - 1.0).abs() <= 1e-12,
        format!("kraft total {total} differs from 1"),
    );
    out.check(monotone && total <= 1.0 + 1e-12, "kraft sums must be monotone and at most 1");
    out.check(prefix_free, "prefix collision among enumerated programs");
    out.check(
        (enumerated - analytic).abs() <= 1e-12,
        "enumerated and analytic mass disagree at depth 12",
    );
    Ok(out)
}

// ---------------------------------------------------------------------------
// simplest-event-scan
// ---------------------------------------------------------------------------

fn simplest_event_scan(t_max_log2: u32, check_to_log2: u32) -> Result<ScenarioOutput, ExperimentError> {
    if !(1..=24).contains(&t_max_log2) || check_to_log2 >= t_max_log2 {
        return Err(ExperimentError::Config(format!(
            "need 1 <= t_max_log2 <= 24 and check_to_log2 < t_max_log2, got {t_max_log2}/{check_to_log2}"
        )));
    }
    let mut out = ScenarioOutput::default();
    let t_max = 1u64 << t_max_log2;
    let scan = toylang::simplest_unprecedented_scan(t_max);

    // the staircase is nondecreasing in t (minimum over a shrinking range)
    let mut monotone = true;
    for w in scan.windows(2) {
        if w[0] > w[1] {
            monotone = false;
            break;
        }
    }
    // for every t up to the check bound, the next power of two above t
    // caps the complexity of the simplest unprecedented event
    let mut capped = true;
    for t in 1..=(1u64 << check_to_log2) {
        let next_pow = 1u64 << (64 - t.leading_zeros());
        if scan[t as usize - 1] > toylang::length_event_bits(next_pow) {
            capped = false;
            break;
        }
    }

    let mut table = Table::new("simplest_event", &["t", "simplest_bits", "next_pow2_bits"]);
    let mut samples: Vec<u64> = vec![1, 2, 3, 5, 6];
    for k in 3..=t_max_log2 {
        let p = 1u64 << k;
        samples.extend([p - 1, p, p + 1].iter().filter(|&&x| x <= t_max));
    }
    samples.dedup();
    let mut series = Vec::new();
    for &t in &samples {
        let next_pow = if t >= t_max {
            t_max
        } else {
            1u64 << (64 - t.leading_zeros())
        };
        table.push(vec![
            t.to_string(),
            scan[t as usize - 1].to_string(),
            toylang::length_event_bits(next_pow).to_string(),
        ]);
        series.push(((t as f64).log2(), scan[t as usize - 1] as f64));
    }
    out.tables.push(table);
    out.plots.push(crate::report::Plot {
        name: "simplest_event_staircase".into(),
        svg: plot::line_plot(
            "description length of the simplest unprecedented event",
            "log2 t",
            "bits",
            &[("simplest".to_string(), series)],
        ),
    });

    out.record(
        "simplest-event-scan",
        "bits_at_t1",
        scan[0] as f64,
        "bits",
    );
    out.record(
        "simplest-event-scan",
        "bits_at_2^20".to_string(),
        scan[((1u64 << 20.min(t_max_log2 as u64)) - 1) as usize] as f64,
        "bits",
    );
    out.check(monotone, "staircase must be nondecreasing in t");
    out.check(capped, "a power-of-two event must cap the complexity above every t");
    Ok(out)
}
