#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use swarm_lifetime::channel::{ChannelKind, ChannelModel};
use swarm_lifetime::model::{Robot, SubsetSystem, SwarmState};

pub fn awgn() -> ChannelModel {
    ChannelModel::at_reference(ChannelKind::Awgn, 10.0).unwrap()
}

pub fn rayleigh() -> ChannelModel {
    ChannelModel::at_reference(ChannelKind::Rayleigh, 10.0).unwrap()
}

pub fn swarm(energies: &[f64], eps_task: f64, eps_coding: f64, cap: f64) -> SwarmState {
    let robots = energies
        .iter()
        .enumerate()
        .map(|(id, &e)| Robot::new(id, e, eps_task, eps_coding, cap).unwrap())
        .collect();
    SwarmState::from_robots(robots).unwrap()
}

/// `m` pairwise-disjoint, non-empty subsets covering `0..n`.
pub fn disjoint_system<R: Rng>(rng: &mut R, n: usize, m: usize) -> SubsetSystem {
    assert!(m >= 1 && m <= n);
    let mut robots: Vec<usize> = (0..n).collect();
    robots.shuffle(rng);
    let mut subsets: Vec<BTreeSet<usize>> =
        robots[..m].iter().map(|&r| BTreeSet::from([r])).collect();
    for &r in &robots[m..] {
        subsets[rng.random_range(0..m)].insert(r);
    }
    SubsetSystem::new(n, 1, subsets)
}

/// `m` equal-size disjoint subsets; `n` must be a multiple of `m`.
pub fn equal_disjoint_system(n: usize, m: usize) -> SubsetSystem {
    assert_eq!(n % m, 0);
    let size = n / m;
    SubsetSystem::new(
        n,
        size,
        (0..m)
            .map(|j| (j * size..(j + 1) * size).collect())
            .collect(),
    )
}

/// Every subset contains robots `0..core`; the rest are spread randomly.
pub fn common_core_system<R: Rng>(rng: &mut R, n: usize, m: usize, core: usize) -> SubsetSystem {
    assert!(core >= 1 && core <= n);
    let mut subsets: Vec<BTreeSet<usize>> = vec![(0..core).collect(); m];
    for r in core..n {
        subsets[rng.random_range(0..m)].insert(r);
        for s in subsets.iter_mut() {
            if rng.random_bool(0.2) {
                s.insert(r);
            }
        }
    }
    SubsetSystem::new(n, 1, subsets)
}

/// Arbitrary non-empty subsets that together cover `0..n`.
pub fn random_system<R: Rng>(rng: &mut R, n: usize, m: usize) -> SubsetSystem {
    let mut subsets = vec![BTreeSet::new(); m];
    for r in 0..n {
        subsets[rng.random_range(0..m)].insert(r);
        for s in subsets.iter_mut() {
            if rng.random_bool(0.3) {
                s.insert(r);
            }
        }
    }
    for s in subsets.iter_mut() {
        if s.is_empty() {
            s.insert(rng.random_range(0..n));
        }
    }
    SubsetSystem::new(n, 1, subsets)
}

/// Largest `i` with `e0 - ceil(i / m) * c - i * eps >= 0`: round robin over
/// `m` equally charged disjoint groups, counted task by task.
pub fn round_robin_oracle(e0: f64, m: usize, c: f64, eps: f64) -> u64 {
    let mut i: u64 = 0;
    loop {
        let next = i + 1;
        let uses = next.div_ceil(m as u64);
        if e0 - uses as f64 * c - next as f64 * eps < 0.0 {
            return i;
        }
        i = next;
    }
}

/// Tasks one robot survives when it pays `per_task` every task.
pub fn drain_oracle(e0: f64, per_task: f64) -> u64 {
    let mut e = e0;
    let mut i = 0;
    while e - per_task >= 0.0 {
        e -= per_task;
        i += 1;
    }
    i
}
