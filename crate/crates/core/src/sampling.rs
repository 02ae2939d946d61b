//! Seeded sampling from semi-distributions.
//!
//! Every stochastic experiment in the crate derives its randomness from a
//! `u64` seed through ChaCha, and per-trajectory generators are derived
//! deterministically from (seed, index), so runs replay exactly.

use crate::history::History;
use crate::semidist::SemiDistribution;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("model halted (deficiency mass drawn) at step {step} with mass {mass}")]
    Halted { step: usize, mass: f64 },
}

/// splitmix64, used to derive independent stream seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// A generator for stream `index` of experiment `seed`.
pub fn rng_for(seed: u64, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index)))
}

/// Draw one symbol from the model's conditional at `h`; `None` means the
/// deficiency mass was drawn (the model halted).
pub fn sample_symbol(
    model: &dyn SemiDistribution,
    h: &History,
    rng: &mut impl Rng,
) -> Option<u8> {
    let u: f64 = rng.gen::<f64>();
    let mut acc = 0.0;
    for s in model.alphabet().symbols() {
        acc += model.prob(h, s);
        if u < acc {
            return Some(s);
        }
    }
    None
}

/// Sample a trajectory of exactly `len` symbols from `model`, both
/// parities included. Halting before `len` symbols is an error; callers
/// use proper (mass-1) models for trajectory sampling.
pub fn sample_path(
    model: &dyn SemiDistribution,
    len: usize,
    rng: &mut impl Rng,
) -> Result<History, SamplingError> {
    let mut h = History::empty();
    for step in 0..len {
        match sample_symbol(model, &h, rng) {
            Some(s) => h = h.child(s),
            None => {
                return Err(SamplingError::Halted {
                    step,
                    mass: model.mass_at(&h),
                })
            }
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::semidist::Predictor;

    #[test]
    fn same_seed_same_path() {
        let m = Predictor::bernoulli(0.37).unwrap();
        let a = sample_path(&m, 64, &mut rng_for(9, 0)).unwrap();
        let b = sample_path(&m, 64, &mut rng_for(9, 0)).unwrap();
        let c = sample_path(&m, 64, &mut rng_for(9, 1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn deficient_model_halts() {
        let m = Predictor::iid(
            Alphabet::binary(),
            crate::semidist::WeightRow::new(vec![0, 0], 1),
        )
        .unwrap();
        assert!(matches!(
            sample_path(&m, 4, &mut rng_for(0, 0)),
            Err(SamplingError::Halted { step: 0, .. })
        ));
    }
}
