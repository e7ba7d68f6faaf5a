//! Stochastic robot-subset formation for Monte Carlo trials.
//!
//! Robots are first spread over `K` observation bins (robots in one bin see
//! strongly correlated data), then every subset takes at least one robot
//! from every bin, so any subset carries `K` independent observations.
//!
//! Per bin with `M_k` robots and `M` subsets:
//! * `M_k == M`: a random bijection robot -> subset.
//! * `M_k > M`: every subset gets `M_k / M` robots, the remainder goes one
//!   each to randomly chosen subsets.
//! * `M_k < M`: the bin is padded to `M` entries with uniform re-draws of its
//!   own members, then distributed as in the first case. Padding is what
//!   makes subsets overlap.

use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use thiserror::Error;

use crate::model::{RobotId, SubsetSystem};
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenerationError {
    #[error("need N <= M*K to cover every robot (N={n}, M={m}, K={k})")]
    TooFewSlots { n: usize, m: usize, k: usize },
    #[error("need N >= K (N={n}, K={k})")]
    TooFewRobots { n: usize, k: usize },
    #[error("M and K must be positive (M={m}, K={k})")]
    Empty { m: usize, k: usize },
}

/// Steps 1 and 2: `k` bins, each seeded with one distinct robot, then the
/// remaining `n - k` robots dropped into uniformly chosen bins.
pub fn form_bins<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<Vec<RobotId>> {
    assert!(k >= 1 && n >= k, "form_bins needs 1 <= k <= n");
    let mut robots: Vec<RobotId> = (0..n).collect();
    robots.shuffle(rng);
    let mut bins: Vec<Vec<RobotId>> = robots[..k].iter().map(|&r| vec![r]).collect();
    for &r in &robots[k..] {
        bins[rng.random_range(0..k)].push(r);
    }
    bins
}

/// Step 3 for one bin: the robot(s) each of the `m` subsets receives.
pub fn allocate_bin<R: Rng + ?Sized>(bin: &[RobotId], m: usize, rng: &mut R) -> Vec<Vec<RobotId>> {
    let mut members = bin.to_vec();
    members.shuffle(rng);
    let mut out = vec![Vec::new(); m];
    let size = members.len();
    if size >= m {
        let per_subset = size / m;
        let (even, rest) = members.split_at(per_subset * m);
        for (slot, &robot) in even.iter().enumerate() {
            out[slot % m].push(robot);
        }
        for (target, &robot) in index::sample(rng, m, rest.len()).iter().zip(rest) {
            out[target].push(robot);
        }
    } else {
        let mut padded = members.clone();
        padded.extend((size..m).map(|_| members[rng.random_range(0..size)]));
        padded.shuffle(rng);
        for (slot, robot) in padded.into_iter().enumerate() {
            out[slot].push(robot);
        }
    }
    out
}

/// Generates `m` subsets over `n` robots with at least `k` robots each.
pub fn generate_subsets_with<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    k: usize,
    rng: &mut R,
) -> Result<SubsetSystem, GenerationError> {
    if m == 0 || k == 0 {
        return Err(GenerationError::Empty { m, k });
    }
    if n < k {
        return Err(GenerationError::TooFewRobots { n, k });
    }
    if n > m * k {
        return Err(GenerationError::TooFewSlots { n, m, k });
    }
    let mut subsets = vec![BTreeSet::new(); m];
    for bin in form_bins(n, k, rng) {
        for (subset, robots) in subsets.iter_mut().zip(allocate_bin(&bin, m, rng)) {
            subset.extend(robots);
        }
    }
    Ok(SubsetSystem::new(n, k, subsets))
}

pub fn generate_subsets(
    n: usize,
    m: usize,
    k: usize,
    rng_seed: u64,
) -> Result<SubsetSystem, GenerationError> {
    generate_subsets_with(n, m, k, &mut seed::rng(rng_seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_setting_is_valid() {
        for s in 0..50 {
            let sys = generate_subsets(30, 6, 8, s).unwrap();
            assert_eq!(sys.len(), 6);
            assert!(sys.validate().is_empty(), "seed {s}: {:?}", sys.validate());
            assert!(sys.subsets().iter().all(|x| x.len() >= 8));
        }
    }

    #[test]
    fn deterministic_under_seed() {
        assert_eq!(
            generate_subsets(9, 3, 3, 42).unwrap(),
            generate_subsets(9, 3, 3, 42).unwrap()
        );
    }

    #[test]
    fn small_bin_is_padded_with_its_own_members() {
        let mut rng = seed::rng(5);
        for _ in 0..200 {
            let alloc = allocate_bin(&[1, 2], 4, &mut rng);
            assert_eq!(alloc.len(), 4);
            assert!(alloc.iter().all(|a| a.len() == 1));
            let flat: Vec<_> = alloc.iter().flatten().copied().collect();
            assert!(flat.contains(&1) && flat.contains(&2));
            assert!(flat.iter().all(|r| *r == 1 || *r == 2));
        }
    }

    #[test]
    fn large_bin_spreads_remainder() {
        let mut rng = seed::rng(9);
        for _ in 0..200 {
            let alloc = allocate_bin(&[0, 1, 2, 3, 4, 5, 6], 3, &mut rng);
            let mut sizes: Vec<_> = alloc.iter().map(Vec::len).collect();
            sizes.sort();
            assert_eq!(sizes, vec![2, 2, 3]);
            let mut flat: Vec<_> = alloc.into_iter().flatten().collect();
            flat.sort();
            assert_eq!(flat, (0..7).collect::<Vec<_>>());
        }
    }

    #[test]
    fn exact_bin_is_a_bijection() {
        let mut rng = seed::rng(1);
        let alloc = allocate_bin(&[4, 5, 6], 3, &mut rng);
        let mut flat: Vec<_> = alloc.iter().flatten().copied().collect();
        flat.sort();
        assert_eq!(flat, vec![4, 5, 6]);
        assert!(alloc.iter().all(|a| a.len() == 1));
    }

    #[test]
    fn preconditions() {
        assert_eq!(
            generate_subsets(30, 3, 8, 0),
            Err(GenerationError::TooFewSlots { n: 30, m: 3, k: 8 })
        );
        assert_eq!(
            generate_subsets(5, 3, 8, 0),
            Err(GenerationError::TooFewRobots { n: 5, k: 8 })
        );
        assert!(generate_subsets(5, 0, 2, 0).is_err());
    }

    #[test]
    fn single_subset_holds_everybody() {
        let sys = generate_subsets(4, 1, 4, 3).unwrap();
        assert_eq!(sys.subset(0), &(0..4).collect::<BTreeSet<_>>());
    }
}
