//! Robots, robot subsets and the per-task energy bookkeeping of a swarm.
//!
//! A [`SwarmState`] is a plain value: [`SwarmState::apply_task`] consumes a
//! borrowed state and returns the successor (or the termination report), so a
//! run can be replayed or forked freely.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type RobotId = usize;

/// Smallest swarm size accepted by [`new_swarm`].
pub const MIN_SWARM_SIZE: usize = 3;

/// Relative slack applied to the non-negativity check on remaining energy.
///
/// Remaining energy in `[-tol, 0)` with `tol = ENERGY_TOLERANCE * initial`
/// counts as exactly zero.
pub const ENERGY_TOLERANCE: f64 = 1e-12;

/// Relative slack on the power cap check.
pub const POWER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("a swarm needs at least {MIN_SWARM_SIZE} robots, got {0}")]
    InvalidSwarm(usize),
    #[error("invalid robot parameter: {0}")]
    InvalidParameter(String),
    #[error("robot {robot} transmits at {power} above its cap {cap}")]
    CapViolation {
        robot: RobotId,
        power: f64,
        cap: f64,
    },
    #[error("selected robot {0} has no transmit power")]
    MissingPower(RobotId),
    #[error("robot {0} is not part of the swarm")]
    UnknownRobot(RobotId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Robot {
    pub id: RobotId,
    pub initial_energy: f64,
    pub remaining_energy: f64,
    /// Energy spent on task execution every task, selected or not.
    pub task_cost: f64,
    /// Energy spent on source/channel coding per transmission.
    pub coding_cost: f64,
    pub power_cap: f64,
}

impl Robot {
    pub fn new(
        id: RobotId,
        initial_energy: f64,
        task_cost: f64,
        coding_cost: f64,
        power_cap: f64,
    ) -> Result<Self, ModelError> {
        for (name, v) in [
            ("initial_energy", initial_energy),
            ("task_cost", task_cost),
            ("coding_cost", coding_cost),
            ("power_cap", power_cap),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ModelError::InvalidParameter(format!(
                    "robot {id}: {name} = {v} must be finite and non-negative"
                )));
            }
        }
        Ok(Robot {
            id,
            initial_energy,
            remaining_energy: initial_energy,
            task_cost,
            coding_cost,
            power_cap,
        })
    }

    pub(crate) fn energy_tolerance(&self) -> f64 {
        ENERGY_TOLERANCE * self.initial_energy.max(1.0)
    }
}

/// `M` robot subsets over `N` robots; every subset alone carries enough
/// information for the edge computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSystem {
    n_robots: usize,
    k_min: usize,
    subsets: Vec<BTreeSet<RobotId>>,
}

/// A structural defect found by [`SubsetSystem::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubsetViolation {
    RobotOutOfRange { subset: usize, robot: RobotId },
    SubsetTooSmall { subset: usize, size: usize },
    RobotUncovered { robot: RobotId },
    NoSubsets,
}

impl fmt::Display for SubsetViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubsetViolation::RobotOutOfRange { subset, robot } => {
                write!(
                    f,
                    "subset {subset} references robot {robot} outside the swarm"
                )
            }
            SubsetViolation::SubsetTooSmall { subset, size } => {
                write!(f, "subset {subset} has only {size} robots")
            }
            SubsetViolation::RobotUncovered { robot } => {
                write!(f, "robot {robot} belongs to no subset")
            }
            SubsetViolation::NoSubsets => write!(f, "the system has no subsets"),
        }
    }
}

impl SubsetSystem {
    /// Builds a system without checking it; see [`SubsetSystem::validate`].
    pub fn new(n_robots: usize, k_min: usize, subsets: Vec<BTreeSet<RobotId>>) -> Self {
        SubsetSystem {
            n_robots,
            k_min,
            subsets,
        }
    }

    pub fn n_robots(&self) -> usize {
        self.n_robots
    }

    pub fn k_min(&self) -> usize {
        self.k_min
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn subsets(&self) -> &[BTreeSet<RobotId>] {
        &self.subsets
    }

    pub fn subset(&self, m: usize) -> &BTreeSet<RobotId> {
        &self.subsets[m]
    }

    /// Robots shared by every subset.
    pub fn common_robots(&self) -> BTreeSet<RobotId> {
        let mut iter = self.subsets.iter();
        let Some(first) = iter.next() else {
            return BTreeSet::new();
        };
        iter.fold(first.clone(), |acc, s| {
            acc.intersection(s).copied().collect()
        })
    }

    pub fn intersects(&self, a: usize, b: usize) -> bool {
        !self.subsets[a].is_disjoint(&self.subsets[b])
    }

    /// Empty iff every robot id is in range, every subset has at least
    /// `k_min` members and the subsets cover the whole swarm.
    pub fn validate(&self) -> Vec<SubsetViolation> {
        let mut out = Vec::new();
        if self.subsets.is_empty() {
            out.push(SubsetViolation::NoSubsets);
        }
        let mut covered = vec![false; self.n_robots];
        for (m, subset) in self.subsets.iter().enumerate() {
            if subset.len() < self.k_min {
                out.push(SubsetViolation::SubsetTooSmall {
                    subset: m,
                    size: subset.len(),
                });
            }
            for &robot in subset {
                match covered.get_mut(robot) {
                    Some(c) => *c = true,
                    None => out.push(SubsetViolation::RobotOutOfRange { subset: m, robot }),
                }
            }
        }
        out.extend(
            covered
                .iter()
                .enumerate()
                .filter(|(_, c)| !**c)
                .map(|(robot, _)| SubsetViolation::RobotUncovered { robot }),
        );
        out
    }
}

/// Free-function form of [`SubsetSystem::validate`].
pub fn validate_subset_system(sys: &SubsetSystem) -> Vec<SubsetViolation> {
    sys.validate()
}

/// Robots plus the history needed to reconstruct their energy:
/// `E_n(i) = E_n(0) - zeta_n(i) - (i + skipped) * task_cost`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub robots: Vec<Robot>,
    /// Completed tasks.
    pub task_index: u64,
    /// Task slots abandoned without a transmission; every robot still paid its
    /// task cost for them.
    pub skipped: u64,
    /// Per-robot number of transmissions, `w_n`.
    pub selections: Vec<u64>,
    /// Per-robot cumulative transmit plus coding energy, `zeta_n`.
    pub transmit_energy: Vec<f64>,
}

/// Result of [`SwarmState::apply_task`].
#[derive(Debug, Clone, PartialEq)]
pub enum TaskOutcome {
    Completed(SwarmState),
    /// Applying the task would have driven `robot` below zero. `state` is the
    /// untouched pre-task state and `completed` the last task that succeeded.
    Terminated {
        state: SwarmState,
        completed: u64,
        robot: RobotId,
    },
}

/// `n` identical robots.
pub fn new_swarm(
    n: usize,
    initial_energy: f64,
    task_cost: f64,
    coding_cost: f64,
    power_cap: f64,
) -> Result<SwarmState, ModelError> {
    if n < MIN_SWARM_SIZE {
        return Err(ModelError::InvalidSwarm(n));
    }
    let robots = (0..n)
        .map(|id| Robot::new(id, initial_energy, task_cost, coding_cost, power_cap))
        .collect::<Result<Vec<_>, _>>()?;
    SwarmState::from_robots(robots)
}

impl SwarmState {
    /// Fresh state over arbitrary robots. Ids must be `0..n` in order.
    pub fn from_robots(robots: Vec<Robot>) -> Result<Self, ModelError> {
        if robots.len() < MIN_SWARM_SIZE {
            return Err(ModelError::InvalidSwarm(robots.len()));
        }
        if let Some(r) = robots.iter().enumerate().find(|(i, r)| r.id != *i) {
            return Err(ModelError::InvalidParameter(format!(
                "robot at position {} has id {}",
                r.0, r.1.id
            )));
        }
        let n = robots.len();
        Ok(SwarmState {
            robots,
            task_index: 0,
            skipped: 0,
            selections: vec![0; n],
            transmit_energy: vec![0.0; n],
        })
    }

    pub fn n_robots(&self) -> usize {
        self.robots.len()
    }

    pub fn remaining(&self, robot: RobotId) -> f64 {
        self.robots[robot].remaining_energy
    }

    pub fn min_remaining(&self) -> f64 {
        self.robots
            .iter()
            .map(|r| r.remaining_energy)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn total_remaining(&self) -> f64 {
        self.robots.iter().map(|r| r.remaining_energy).sum()
    }

    /// Runs one task: robots in `selected` transmit at `powers[n]` for `t_c`
    /// and pay the coding cost; everybody pays the task cost.
    pub fn apply_task(
        &self,
        selected: &BTreeSet<RobotId>,
        powers: &BTreeMap<RobotId, f64>,
        t_c: f64,
    ) -> Result<TaskOutcome, ModelError> {
        for &id in selected {
            let robot = self.robots.get(id).ok_or(ModelError::UnknownRobot(id))?;
            let power = *powers.get(&id).ok_or(ModelError::MissingPower(id))?;
            if power.is_nan() || power < 0.0 || power > robot.power_cap * (1.0 + POWER_TOLERANCE) {
                return Err(ModelError::CapViolation {
                    robot: id,
                    power,
                    cap: robot.power_cap,
                });
            }
        }

        let mut next = self.clone();
        for &id in selected {
            let robot = &self.robots[id];
            let spent = powers[&id] * t_c + robot.coding_cost;
            next.selections[id] += 1;
            next.transmit_energy[id] += spent;
            next.robots[id].remaining_energy -= spent;
        }
        for robot in next.robots.iter_mut() {
            robot.remaining_energy -= robot.task_cost;
        }
        next.task_index += 1;

        if let Some(id) = next.settle() {
            return Ok(TaskOutcome::Terminated {
                state: self.clone(),
                completed: self.task_index,
                robot: id,
            });
        }
        Ok(TaskOutcome::Completed(next))
    }

    /// Abandons a task slot: no transmission, every robot pays its task cost,
    /// `task_index` stays put.
    pub fn apply_idle(&self) -> TaskOutcome {
        let mut next = self.clone();
        for robot in next.robots.iter_mut() {
            robot.remaining_energy -= robot.task_cost;
        }
        next.skipped += 1;
        match next.settle() {
            Some(id) => TaskOutcome::Terminated {
                state: self.clone(),
                completed: self.task_index,
                robot: id,
            },
            None => TaskOutcome::Completed(next),
        }
    }

    /// Snaps tolerance-level negatives to zero; returns the first robot that
    /// is genuinely below zero.
    fn settle(&mut self) -> Option<RobotId> {
        let mut dead = None;
        for robot in self.robots.iter_mut() {
            if robot.remaining_energy < 0.0 {
                if robot.remaining_energy >= -robot.energy_tolerance() {
                    robot.remaining_energy = 0.0;
                } else if dead.is_none() {
                    dead = Some(robot.id);
                }
            }
        }
        dead
    }

    /// Largest per-robot gap in `E_n(0) - E_n = zeta_n + (i + skipped) * task_cost`,
    /// relative to `max(E_n(0), 1)`.
    pub fn conservation_error(&self) -> f64 {
        let slots = (self.task_index + self.skipped) as f64;
        self.robots
            .iter()
            .zip(&self.transmit_energy)
            .map(|(r, zeta)| {
                let lhs = r.initial_energy - r.remaining_energy;
                let rhs = zeta + slots * r.task_cost;
                (lhs - rhs).abs() / r.initial_energy.max(1.0)
            })
            .fold(0.0, f64::max)
    }
}
