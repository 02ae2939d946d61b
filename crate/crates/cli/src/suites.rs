//! Seeded scenario families.
//!
//! Everything here is generated deterministically from a seed: the same
//! seed yields the same classes, triggers, prefixes, and policies, so the
//! built-ins and the acceptance suite measure identical objects.

use imitlab_core::alphabet::Alphabet;
use imitlab_core::event::Event;
use imitlab_core::history::History;
use imitlab_core::mixture::ModelClass;
use imitlab_core::sampling::rng_for;
use imitlab_core::semidist::{Predictor, SemiDistribution, WeightRow};
use imitlab_core::utility::{UtilityFunction, UtilityKind};
use imitlab_core::Symbol;
use rand::Rng;
use std::sync::Arc;

/// One switch-bound scenario: a model class, a trigger that is
/// unprecedented on the start history and happens at its final step, a
/// utility, and the target value the post policy must beat.
pub struct SwitchCase {
    pub label: String,
    pub class: Arc<ModelClass>,
    pub trigger: Event,
    pub utility: UtilityFunction,
    pub start: History,
    pub target_value: f64,
    pub alphabet: Alphabet,
    pub action_steps: usize,
    pub prefix_pairs: usize,
}

/// Deterministic switch-bound scenario family. The class, trigger, and
/// post-trigger structure depend only on `(seed, index)`; `prefix_pairs`
/// controls how much trigger-free training history precedes the trigger,
/// so the wrapper overhead of two builds of the same index can be
/// compared directly.
pub fn switch_case(seed: u64, index: u64, prefix_pairs: usize) -> SwitchCase {
    let mut rng = rng_for(seed, index);
    let k = 2 + (rng.gen_range(0..2u8) as usize); // |X| in {2, 3}
    let alphabet = Alphabet::new(k).unwrap();
    let n_models = rng.gen_range(2..=4usize);
    let action_steps = rng.gen_range(2..=4usize);
    let star: Symbol = rng.gen_range(0..k as u8);
    let trigger_sym: Symbol = (k - 1) as u8;

    // every third case uses weight-backed models with the Kraft prior;
    // the rest use float models with explicit weights
    let encodable = index % 3 == 0;
    let class = if encodable {
        let mut members = Vec::new();
        for j in 0..n_models {
            let sample_row = |rng: &mut rand_chacha::ChaCha12Rng| {
                // weights in 40..=200 keep every probability above 0.05
                let w: Vec<u8> = (0..k).map(|_| rng.gen_range(40..=200u8)).collect();
                WeightRow::proper(w)
            };
            let action = sample_row(&mut rng);
            let observation = sample_row(&mut rng);
            members.push((
                format!("m{j}"),
                Predictor::parity_iid(alphabet, action, observation).unwrap(),
            ));
        }
        Arc::new(ModelClass::from_predictors(alphabet, members).unwrap())
    } else {
        let mut members: Vec<(String, Arc<dyn SemiDistribution>, f64)> = Vec::new();
        for j in 0..n_models {
            let mut sample_row = |floor_mix: f64| -> Vec<f64> {
                let u: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
                let s: f64 = u.iter().sum();
                u.iter()
                    .map(|x| (1.0 - floor_mix) * x / s + floor_mix / k as f64)
                    .collect()
            };
            let action = sample_row(0.2);
            let observation = sample_row(0.2);
            let model = Predictor::float_parity(alphabet, action, observation).unwrap();
            let weight = rng.gen_range(0.5..1.0);
            members.push((format!("m{j}"), Arc::new(model), weight));
        }
        Arc::new(ModelClass::from_weights(alphabet, members).unwrap())
    };

    // trigger-free training prefix, then the triggering pair
    let mut symbols = Vec::with_capacity(2 * (prefix_pairs + 1));
    for _ in 0..prefix_pairs {
        symbols.push(rng.gen_range(0..k as u8)); // action
        symbols.push(rng.gen_range(0..(k - 1) as u8)); // observation != trigger_sym
    }
    symbols.push(rng.gen_range(0..k as u8));
    symbols.push(trigger_sym);
    let start = History::new(symbols);

    let m = prefix_pairs + 1 + action_steps;
    let utility = UtilityFunction::new(m, UtilityKind::MeanActionMatches(star)).unwrap();
    // the best constant policy plays `star` for the remaining steps
    let star_in_prefix = start.actions().filter(|&a| a == star).count();
    let best_constant = (star_in_prefix + action_steps) as f64 / m as f64;

    SwitchCase {
        label: format!("switch-{index}-k{k}-n{n_models}-L{action_steps}-p{prefix_pairs}"),
        class,
        trigger: Event::last_obs_equals(trigger_sym),
        utility,
        start,
        target_value: best_constant - 0.01,
        alphabet,
        action_steps,
        prefix_pairs,
    }
}

/// One TVD-pathology instance: a single action step over a dense policy
/// grid, with the base policy on the grid and utility gaps wide enough
/// that the V-optimal action is unambiguous.
pub struct TvdCase {
    pub label: String,
    pub env: Predictor,
    pub beta: Predictor,
    pub utility: UtilityFunction,
    pub start: History,
    pub budget: f64,
    pub alphabet: Alphabet,
}

pub fn tvd_case(seed: u64, index: u64, resolution: usize) -> TvdCase {
    let mut rng = rng_for(seed.wrapping_add(0x71d), index);
    let k = if index % 5 == 4 { 3 } else { 2 };
    let alphabet = Alphabet::new(k).unwrap();

    // base policy probabilities on the grid, each at least 5 cells
    let grid_row = |rng: &mut rand_chacha::ChaCha12Rng| -> Vec<f64> {
        loop {
            let mut cells = vec![0usize; k];
            let mut left = resolution;
            for slot in cells.iter_mut().take(k - 1) {
                *slot = rng.gen_range(0..=left);
                left -= *slot;
            }
            cells[k - 1] = left;
            if cells.iter().all(|&c| c * 20 >= resolution) {
                return cells
                    .iter()
                    .map(|&c| c as f64 / resolution as f64)
                    .collect();
            }
        }
    };
    let beta = Predictor::float_iid(alphabet, grid_row(&mut rng)).unwrap();

    let env_probs: Vec<f64> = {
        let u: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
        let s: f64 = u.iter().sum();
        u.iter().map(|x| x / s).collect()
    };
    let env = Predictor::float_iid(alphabet, env_probs).unwrap();

    // rewards with pairwise gaps of at least 0.15
    let rewards: Vec<f64> = loop {
        let r: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut ok = true;
        for i in 0..k {
            for j in (i + 1)..k {
                if (r[i] - r[j]).abs() < 0.15 {
                    ok = false;
                }
            }
        }
        if ok {
            break r;
        }
    };

    let prefix_pairs = rng.gen_range(0..=2usize);
    let mut symbols = Vec::new();
    for _ in 0..prefix_pairs {
        symbols.push(rng.gen_range(0..k as u8));
        symbols.push(rng.gen_range(0..k as u8));
    }
    let start = History::new(symbols);
    let m = prefix_pairs + 1;
    let utility = UtilityFunction::new(m, UtilityKind::ActionReward(rewards)).unwrap();
    let budget = rng.gen_range(0.05..0.6);

    TvdCase {
        label: format!("tvd-{index}-k{k}-m{m}"),
        env,
        beta,
        utility,
        start,
        budget,
        alphabet,
    }
}

/// One containment scenario: a class of distinct full-support models, a
/// designated demonstrator, and a demonstrator-sampled start history.
pub struct ContainmentCase {
    pub label: String,
    pub class: Arc<ModelClass>,
    pub mu_index: usize,
    pub alpha: f64,
    pub start: History,
    pub horizon: usize,
    pub alphabet: Alphabet,
}

pub fn containment_case(seed: u64, index: u64) -> ContainmentCase {
    let alphabet = Alphabet::binary();
    if index == 0 {
        // the singleton class exercises the equality case
        let class = Arc::new(
            ModelClass::from_weights(
                alphabet,
                vec![(
                    "mu".into(),
                    Arc::new(Predictor::bernoulli(0.5).unwrap()) as Arc<dyn SemiDistribution>,
                    1.0,
                )],
            )
            .unwrap(),
        );
        return ContainmentCase {
            label: "containment-0-singleton".into(),
            class,
            mu_index: 0,
            alpha: 0.1,
            start: History::empty(),
            horizon: 2,
            alphabet,
        };
    }
    let mut rng = rng_for(seed.wrapping_add(0xc0), index);
    let n = rng.gen_range(3..=6usize);
    // action-stream Bernoulli parameters spaced at least 0.05 apart, so
    // top-set members genuinely disagree at every context
    let ps: Vec<f64> = (0..n)
        .map(|j| 0.3 + 0.4 * j as f64 / (n - 1) as f64 + rng.gen_range(-0.02..0.02))
        .collect();
    let mut members: Vec<(String, Arc<dyn SemiDistribution>, f64)> = Vec::new();
    for (j, &p) in ps.iter().enumerate() {
        let q = 0.35 + 0.3 * rng.gen::<f64>();
        let model = Predictor::float_parity(alphabet, vec![1.0 - p, p], vec![1.0 - q, q]).unwrap();
        members.push((format!("m{j}"), Arc::new(model), rng.gen_range(0.6..1.0)));
    }
    let class = Arc::new(ModelClass::from_weights(alphabet, members).unwrap());
    let mu_index = rng.gen_range(0..n);

    // short demonstrator-sampled prefix keeps the posterior from
    // collapsing to a singleton top set
    let prefix_pairs = rng.gen_range(1..=3usize);
    let mu = class.entries()[mu_index].model.clone();
    let mut h = History::empty();
    for _ in 0..2 * prefix_pairs {
        let row = mu.dist_at(&h);
        let u: f64 = rng.gen();
        let sym = if u < row[0] { 0 } else { 1 };
        h = h.child(sym);
    }
    let horizon = prefix_pairs + rng.gen_range(2..=3usize);

    ContainmentCase {
        label: format!("containment-{index}-n{n}-mu{mu_index}"),
        class,
        mu_index,
        alpha: rng.gen_range(0.08..0.15),
        start: h,
        horizon,
        alphabet,
    }
}

/// A seeded random full-support comparison policy for containment runs.
pub fn containment_policy(seed: u64, case: u64, policy: u64, alphabet: Alphabet) -> Predictor {
    let mut rng = rng_for(seed.wrapping_add(0x90), case * 1000 + policy);
    let k = alphabet.size();
    let row: Vec<f64> = {
        let u: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = u.iter().sum();
        u.iter().map(|x| 0.9 * x / s + 0.1 / k as f64).collect()
    };
    Predictor::float_iid(alphabet, row).unwrap()
}

/// The five-model retention class; the demonstrator is index 2.
pub fn retention_class() -> (Arc<ModelClass>, usize) {
    let alphabet = Alphabet::binary();
    let action_ps = [0.35, 0.45, 0.5, 0.55, 0.65];
    let obs_ps = [0.3, 0.45, 0.5, 0.55, 0.7];
    let members: Vec<(String, Arc<dyn SemiDistribution>, f64)> = action_ps
        .iter()
        .zip(&obs_ps)
        .enumerate()
        .map(|(j, (&p, &q))| {
            (
                format!("m{j}"),
                Arc::new(
                    Predictor::float_parity(alphabet, vec![1.0 - p, p], vec![1.0 - q, q]).unwrap(),
                ) as Arc<dyn SemiDistribution>,
                1.0,
            )
        })
        .collect();
    (
        Arc::new(ModelClass::from_weights(alphabet, members).unwrap()),
        2,
    )
}

/// The canonical budget-spend scenario: base models that consider the
/// post-trigger action astronomically unlikely, so the switch policy pays
/// nearly its whole KL cost at the trigger step.
pub struct ProfileCase {
    pub class: Arc<ModelClass>,
    pub trigger: Event,
    pub post: Predictor,
}

pub fn profile_case() -> ProfileCase {
    let alphabet = Alphabet::binary();
    let members: Vec<(String, Arc<dyn SemiDistribution>, f64)> = vec![
        (
            "quiet-1".into(),
            Arc::new(
                Predictor::float_parity(
                    alphabet,
                    vec![1.0 - 1e-8, 1e-8],
                    vec![0.75, 0.25],
                )
                .unwrap(),
            ),
            0.6,
        ),
        (
            "quiet-2".into(),
            Arc::new(
                Predictor::float_parity(
                    alphabet,
                    vec![1.0 - 3e-8, 3e-8],
                    vec![0.75, 0.25],
                )
                .unwrap(),
            ),
            0.4,
        ),
    ];
    ProfileCase {
        class: Arc::new(ModelClass::from_weights(alphabet, members).unwrap()),
        trigger: Event::last_obs_equals(1),
        post: Predictor::Constant {
            alphabet,
            symbol: 1,
        },
    }
}

/// The fixed tiny instance behind the budget sweep.
pub fn budget_sweep_instance() -> (Predictor, Predictor, UtilityFunction) {
    let env = Predictor::bernoulli(0.6).unwrap();
    let beta = Predictor::bernoulli(0.25).unwrap();
    let utility = UtilityFunction::new(3, UtilityKind::MeanActionMatches(1)).unwrap();
    (env, beta, utility)
}
