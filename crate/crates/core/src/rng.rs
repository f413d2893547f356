//! The single randomness source of the crate.
//!
//! Every random choice is drawn from ChaCha8 (`rand_chacha::ChaCha8Rng`)
//! seeded with `seed_from_u64(seed)`. Monte Carlo trial `k` uses the same
//! key with the ChaCha stream id set to `k + 1`, so trials can be evaluated
//! in any order, or in parallel, and still reproduce the sequential output.
//! Stream 0 is reserved for non-trial draws made directly from `seed`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Prng = ChaCha8Rng;

pub fn from_seed(seed: u64) -> Prng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn for_trial(seed: u64, trial: u64) -> Prng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_add(1));
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn trial_streams_are_independent_of_order() {
        let a: Vec<u64> = (0..4).map(|t| for_trial(9, t).next_u64()).collect();
        let b: Vec<u64> = (0..4).rev().map(|t| for_trial(9, t).next_u64()).collect();
        let mut b = b;
        b.reverse();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        assert_ne!(from_seed(9).next_u64(), a[0]);
    }
}
