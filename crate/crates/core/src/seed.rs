//! Stable seed derivation. Output depends only on the inputs, never on
//! platform, thread scheduling or crate versions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `base` one word at a time.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix64(base), |acc, &p| {
        mix64(acc.wrapping_add(GOLDEN) ^ mix64(p))
    })
}

/// Seed of one Monte Carlo trial; shared by every strategy in that trial.
pub fn trial_seed(master: u64, m: usize, trial: usize) -> u64 {
    derive(master, &[m as u64, trial as u64])
}

/// Independent sub-streams of a trial seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Subsets = 1,
    Partition = 2,
    Channel = 3,
}

pub fn stream_seed(trial_seed: u64, stream: Stream) -> u64 {
    derive(trial_seed, &[stream as u64])
}

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
