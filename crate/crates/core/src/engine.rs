//! Task-by-task lifetime simulation and a brute-force optimum for tiny
//! AWGN instances.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds;
use crate::channel::{ChannelKind, ChannelModel};
use crate::graph::Partition;
use crate::model::{ModelError, RobotId, SubsetSystem, SubsetViolation, SwarmState, TaskOutcome};
use crate::seed;
use crate::strategy::{Selector, StrategyError, StrategyKind};

/// Slot guard used when no finite energy budget exists.
pub const FALLBACK_MAX_TASKS: u64 = 1_000_000;

/// Multiplier on the energy-budget bound for the default slot guard.
pub const GUARD_FACTOR: u64 = 10;

pub const ORACLE_MAX_SUBSETS: usize = 4;
pub const ORACLE_MAX_LIFETIME: u64 = 30;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid subset system: {0:?}")]
    InvalidSubsets(Vec<SubsetViolation>),
    #[error("subset system covers {subsets} robots but the swarm has {swarm}")]
    SizeMismatch { subsets: usize, swarm: usize },
    #[error("invalid slot duration {0}")]
    SlotDuration(f64),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("the exhaustive search only handles AWGN channels")]
    OracleChannel,
    #[error("instance too large for the exhaustive search ({0})")]
    OracleSize(String),
}

/// What to do when the chosen policy has no feasible subset this slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnInfeasible {
    /// End the run; the lifetime is the number of completed tasks.
    #[default]
    Terminate,
    /// Drop the task: every robot pays its task cost, nobody transmits.
    Skip,
}

impl std::str::FromStr for OnInfeasible {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "terminate" => Ok(OnInfeasible::Terminate),
            "skip" => Ok(OnInfeasible::Skip),
            other => Err(format!("unknown infeasibility policy '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason", content = "robot")]
pub enum Termination {
    EnergyDepleted(RobotId),
    InfeasibleChannel,
    MaxTasksReached,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::EnergyDepleted(_) => "energy_depleted",
            Termination::InfeasibleChannel => "infeasible_channel",
            Termination::MaxTasksReached => "max_tasks_reached",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeRecord {
    /// Completed tasks.
    pub lifetime: u64,
    pub skipped: u64,
    pub termination: Termination,
    /// State after the last completed (or skipped) slot.
    pub final_state: SwarmState,
    /// Subset chosen for each completed task, `None` for the whole swarm.
    pub schedule: Vec<Option<usize>>,
}

impl LifetimeRecord {
    pub fn selections(&self) -> &[u64] {
        &self.final_state.selections
    }

    pub fn transmit_energy(&self) -> &[f64] {
        &self.final_state.transmit_energy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunParams {
    pub strategy: StrategyKind,
    pub model: ChannelModel,
    pub t_c: f64,
    /// Seed of the channel-gain stream.
    pub channel_seed: u64,
    /// Slot guard; `None` derives one from the energy budget.
    pub max_tasks: Option<u64>,
    pub on_infeasible: OnInfeasible,
}

/// Default slot guard: a multiple of the total-energy lifetime bound at the
/// reference power.
pub fn default_max_tasks(
    sys: &SubsetSystem,
    state: &SwarmState,
    model: &ChannelModel,
    t_c: f64,
) -> u64 {
    match bounds::bound_energy_budget(state, sys, model.reference_power(), t_c) {
        Ok(b) => b.saturating_add(1).saturating_mul(GUARD_FACTOR),
        Err(_) => FALLBACK_MAX_TASKS,
    }
}

/// Runs one strategy until a robot would be depleted, the channel leaves no
/// feasible choice (with [`OnInfeasible::Terminate`]) or the slot guard trips.
///
/// Gains for all robots are drawn every slot regardless of the strategy, so
/// strategies sharing `channel_seed` see the same channel realization.
pub fn run_lifetime(
    sys: &SubsetSystem,
    partition: Option<&Partition>,
    initial: &SwarmState,
    params: &RunParams,
) -> Result<LifetimeRecord, EngineError> {
    let violations = sys.validate();
    if !violations.is_empty() {
        return Err(EngineError::InvalidSubsets(violations));
    }
    if sys.n_robots() != initial.n_robots() {
        return Err(EngineError::SizeMismatch {
            subsets: sys.n_robots(),
            swarm: initial.n_robots(),
        });
    }
    if !(params.t_c.is_finite() && params.t_c > 0.0) {
        return Err(EngineError::SlotDuration(params.t_c));
    }
    let mut selector = Selector::new(params.strategy, sys, partition, params.t_c)?;
    let max_slots = params
        .max_tasks
        .unwrap_or_else(|| default_max_tasks(sys, initial, &params.model, params.t_c));
    let mut rng = seed::rng(params.channel_seed);
    let mut state = initial.clone();
    let mut schedule = Vec::new();
    let n = state.n_robots();

    let termination = loop {
        if state.task_index + state.skipped >= max_slots {
            break Termination::MaxTasksReached;
        }
        let draw = params.model.draw(n, &mut rng);
        let outcome = match selector.select(&state, sys, &draw, &params.model) {
            Ok(sel) => {
                let outcome = state.apply_task(&sel.robots, &sel.powers, params.t_c)?;
                if matches!(outcome, TaskOutcome::Completed(_)) {
                    schedule.push(sel.subset);
                }
                outcome
            }
            Err(_) => match params.on_infeasible {
                OnInfeasible::Terminate => break Termination::InfeasibleChannel,
                OnInfeasible::Skip => state.apply_idle(),
            },
        };
        match outcome {
            TaskOutcome::Completed(next) => state = next,
            TaskOutcome::Terminated { robot, .. } => break Termination::EnergyDepleted(robot),
        }
    };

    Ok(LifetimeRecord {
        lifetime: state.task_index,
        skipped: state.skipped,
        termination,
        final_state: state,
        schedule,
    })
}

/// Optimal lifetime over every possible subset schedule in an AWGN channel,
/// by depth-first search over per-subset usage counts.
///
/// Only usage counts matter because energy after any schedule depends on
/// how often each subset was used, not on the order.
pub fn exhaustive_optimal_lifetime(
    sys: &SubsetSystem,
    initial: &SwarmState,
    model: &ChannelModel,
    t_c: f64,
) -> Result<u64, EngineError> {
    if model.kind != ChannelKind::Awgn {
        return Err(EngineError::OracleChannel);
    }
    if sys.len() > ORACLE_MAX_SUBSETS {
        return Err(EngineError::OracleSize(format!("{} subsets", sys.len())));
    }
    let violations = sys.validate();
    if !violations.is_empty() {
        return Err(EngineError::InvalidSubsets(violations));
    }
    if sys.n_robots() != initial.n_robots() {
        return Err(EngineError::SizeMismatch {
            subsets: sys.n_robots(),
            swarm: initial.n_robots(),
        });
    }
    let power = model.reference_power();
    let robots = &initial.robots;
    let upload: Vec<f64> = robots.iter().map(|r| power * t_c + r.coding_cost).collect();
    let usable: Vec<usize> = (0..sys.len())
        .filter(|&m| {
            sys.subset(m)
                .iter()
                .all(|&n| power <= robots[n].power_cap * (1.0 + crate::model::POWER_TOLERANCE))
        })
        .collect();

    let budget = |n: usize, per: f64| -> u64 {
        if per <= 0.0 {
            u64::MAX
        } else {
            (robots[n].remaining_energy / per).floor() as u64
        }
    };
    let per_subset: u64 = usable
        .iter()
        .map(|&m| {
            sys.subset(m)
                .iter()
                .map(|&n| budget(n, upload[n] + robots[n].task_cost))
                .min()
                .unwrap_or(u64::MAX)
        })
        .fold(0u64, u64::saturating_add);
    let per_robot = (0..robots.len())
        .map(|n| {
            let always = usable.iter().all(|&m| sys.subset(m).contains(&n));
            budget(
                n,
                robots[n].task_cost + if always { upload[n] } else { 0.0 },
            )
        })
        .min()
        .unwrap_or(u64::MAX);
    let upper = per_subset.min(per_robot);
    if upper > ORACLE_MAX_LIFETIME {
        return Err(EngineError::OracleSize(format!("lifetime bound {upper}")));
    }

    let alive = |counts: &[u64]| -> bool {
        let tasks: u64 = counts.iter().sum();
        robots.iter().enumerate().all(|(n, r)| {
            let uses: u64 = usable
                .iter()
                .zip(counts)
                .filter(|(&m, _)| sys.subset(m).contains(&n))
                .map(|(_, c)| c)
                .sum();
            let left = r.remaining_energy - uses as f64 * upload[n] - tasks as f64 * r.task_cost;
            left >= -r.energy_tolerance()
        })
    };

    fn search(
        counts: &mut Vec<u64>,
        alive: &dyn Fn(&[u64]) -> bool,
        memo: &mut HashMap<Vec<u64>, u64>,
    ) -> u64 {
        if let Some(&v) = memo.get(counts.as_slice()) {
            return v;
        }
        let mut best = 0;
        for m in 0..counts.len() {
            counts[m] += 1;
            if alive(counts) {
                best = best.max(1 + search(counts, alive, memo));
            }
            counts[m] -= 1;
        }
        memo.insert(counts.clone(), best);
        best
    }

    let mut memo = HashMap::new();
    Ok(search(&mut vec![0; usable.len()], &alive, &mut memo))
}
