//! Analytical swarm-lifetime bounds.
//!
//! Notation shared by every function:
//! * `p_tc`: transmit energy of one upload, `p * T_c`;
//! * `eps_c`: coding energy per upload;
//! * `eps_t`: task-execution energy every robot pays every task.
//!
//! The self-referential bounds (a group may upload `w(i)` times, and `w`
//! itself shrinks with `i` because of the task cost) are solved by walking
//! `i` upward from zero until the feasibility predicate first fails. The
//! predicate is monotone, which the walk asserts in debug builds.

use thiserror::Error;

use crate::channel::ChannelModel;
use crate::graph::Partition;
use crate::model::{SubsetSystem, SwarmState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("per-task energy cost is zero; the lifetime is unbounded")]
    Unbounded,
    #[error("invalid argument: {0}")]
    Invalid(String),
}

fn check_costs(p_tc: f64, eps_c: f64, eps_t: f64) -> Result<(), BoundsError> {
    for (name, v) in [("p_tc", p_tc), ("eps_c", eps_c), ("eps_t", eps_t)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(BoundsError::Invalid(format!("{name} = {v}")));
        }
    }
    Ok(())
}

/// How many uploads a robot with `energy` can still afford after `tasks`
/// tasks; `None` when it cannot even pay the task cost.
fn uploads_left(energy: f64, tasks: u64, eps_t: f64, per_upload: f64) -> Option<u64> {
    let left = energy - tasks as f64 * eps_t;
    if left < 0.0 {
        return None;
    }
    if per_upload <= 0.0 {
        return Some(u64::MAX);
    }
    Some((left / per_upload).floor() as u64)
}

/// Largest `i` with `feasible(i)`, walking up from zero. `None` when even
/// `i = 0` is infeasible.
fn line_search(limit: u64, feasible: impl Fn(u64) -> bool) -> Option<u64> {
    if !feasible(0) {
        return None;
    }
    let mut i = 0;
    while i < limit && feasible(i + 1) {
        i += 1;
    }
    debug_assert!(
        (i + 1..(i + 64).min(limit)).all(|j| !feasible(j)),
        "feasibility predicate is not monotone above {i}"
    );
    Some(i)
}

/// Lifetime when every task drains the same robot fully:
/// `floor(E(0) / (p_tc + eps_c + eps_t))`.
pub fn bound_lemma1(e0: f64, p_tc: f64, eps_c: f64, eps_t: f64) -> Result<u64, BoundsError> {
    check_costs(p_tc, eps_c, eps_t)?;
    let per_task = p_tc + eps_c + eps_t;
    if per_task <= 0.0 {
        return Err(BoundsError::Unbounded);
    }
    if e0.is_nan() || e0 < 0.0 {
        return Err(BoundsError::Invalid(format!("e0 = {e0}")));
    }
    Ok((e0 / per_task).floor() as u64)
}

/// Largest `i` with `i <= sum_g floor((min_g - i * eps_t) / (p_tc + eps_c))`
/// over disjoint groups with weakest-member energies `group_mins`.
///
/// With identical groups this is the round-robin bound
/// `i <= (E(0) - ceil(i / M) * (p_tc + eps_c)) / eps_t`.
pub fn bound_line_search(
    group_mins: &[f64],
    p_tc: f64,
    eps_c: f64,
    eps_t: f64,
) -> Result<u64, BoundsError> {
    check_costs(p_tc, eps_c, eps_t)?;
    if group_mins.is_empty() {
        return Ok(0);
    }
    let per_upload = p_tc + eps_c;
    if per_upload <= 0.0 {
        return Err(BoundsError::Unbounded);
    }
    if eps_t == 0.0 {
        // Nothing shrinks with i: the bound is the total upload budget.
        let total = group_mins
            .iter()
            .map(|&e| uploads_left(e, 0, 0.0, per_upload).unwrap_or(0))
            .fold(0u64, u64::saturating_add);
        return Ok(total);
    }
    let weight_sum = |i: u64| -> Option<u64> {
        group_mins
            .iter()
            .map(|&e| uploads_left(e, i, eps_t, per_upload))
            .try_fold(0u64, |acc, w| w.map(|w| acc.saturating_add(w)))
    };
    let limit = group_mins
        .iter()
        .map(|&e| (e / eps_t).floor() as u64)
        .min()
        .unwrap_or(0);
    Ok(line_search(limit, |i| weight_sum(i).is_some_and(|s| i <= s)).unwrap_or(0))
}

/// [`bound_line_search`] with `m_groups` identical groups.
pub fn bound_line_search_identical(
    e0: f64,
    m_groups: usize,
    p_tc: f64,
    eps_c: f64,
    eps_t: f64,
) -> Result<u64, BoundsError> {
    bound_line_search(&vec![e0; m_groups], p_tc, eps_c, eps_t)
}

/// Upper bound for subsets sharing a common core, and whether the parts
/// outside the core can sustain it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommonCoreBound {
    pub upper: u64,
    pub achievable: bool,
}

/// The core robots upload every task, so the weakest of them caps the
/// lifetime at `floor(min_common / (p_tc + eps_c + eps_t))`. Reaching it
/// requires the non-core remainders (assumed disjoint) to afford
/// `sum_m floor((min_m - upper * eps_t) / (p_tc + eps_c)) >= upper` uploads.
///
/// `per_subset_mins_excl_common[m]` is the weakest robot of subset `m` outside
/// the core, `f64::INFINITY` if the subset is entirely core.
pub fn bound_theorem2(
    min_common: f64,
    per_subset_mins_excl_common: &[f64],
    p_tc: f64,
    eps_c: f64,
    eps_t: f64,
) -> Result<CommonCoreBound, BoundsError> {
    let upper = bound_lemma1(min_common, p_tc, eps_c, eps_t)?;
    Ok(CommonCoreBound {
        upper,
        achievable: core_bound_sustained(upper, per_subset_mins_excl_common, p_tc, eps_c, eps_t)?,
    })
}

/// Whether the non-core remainders can afford `upper` uploads in total.
pub fn core_bound_sustained(
    upper: u64,
    per_subset_mins_excl_common: &[f64],
    p_tc: f64,
    eps_c: f64,
    eps_t: f64,
) -> Result<bool, BoundsError> {
    check_costs(p_tc, eps_c, eps_t)?;
    let per_upload = p_tc + eps_c;
    let sustained = per_subset_mins_excl_common
        .iter()
        .map(|&e| {
            if e.is_infinite() {
                u64::MAX
            } else {
                uploads_left(e, upper, eps_t, per_upload).unwrap_or(0)
            }
        })
        .fold(0u64, u64::saturating_add);
    Ok(upper <= sustained)
}

/// Fading-channel bound over the R-Vertex subsets of `partition`:
/// largest `i` with
/// `i <= sum_r min_{n in subset r} floor((E_n(0) - i * eps_t) / (avg_p_n * t_c + eps_c))`.
pub fn bound_fading(
    initial_energies: &[f64],
    avg_powers: &[f64],
    partition: &Partition,
    sys: &SubsetSystem,
    t_c: f64,
    eps_c: f64,
    eps_t: f64,
) -> Result<u64, BoundsError> {
    check_costs(0.0, eps_c, eps_t)?;
    if partition.is_empty() {
        return Ok(0);
    }
    if initial_energies.len() != avg_powers.len() {
        return Err(BoundsError::Invalid(
            "energy and power vectors differ in length".into(),
        ));
    }
    if let Some(p) = avg_powers.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
        return Err(BoundsError::Invalid(format!(
            "average power {p} must be positive"
        )));
    }
    let groups: Vec<Vec<usize>> = partition
        .r_vertices()
        .into_iter()
        .map(|r| sys.subset(r).iter().copied().collect())
        .collect();
    let omega = |i: u64| -> Option<u64> {
        groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|&n| {
                        uploads_left(initial_energies[n], i, eps_t, avg_powers[n] * t_c + eps_c)
                    })
                    .try_fold(u64::MAX, |acc, w| w.map(|w| acc.min(w)))
            })
            .try_fold(0u64, |acc, w| w.map(|w| acc.saturating_add(w)))
    };
    let mut limit = omega(0).unwrap_or(0);
    if eps_t > 0.0 {
        let starve = initial_energies
            .iter()
            .map(|&e| (e / eps_t).floor() as u64)
            .min()
            .unwrap_or(0);
        limit = limit.min(starve);
    }
    Ok(line_search(limit, |i| omega(i).is_some_and(|s| i <= s)).unwrap_or(0))
}

/// Average transmit power per robot in the fading bound: either the model's
/// cap-truncated expectation or the realized average of a finished run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AveragePower<'a> {
    Analytic { model: &'a ChannelModel },
    Measured { state: &'a SwarmState, t_c: f64 },
}

impl AveragePower<'_> {
    /// Per-robot average power. Robots that never transmitted in a measured
    /// run fall back to the analytic value of `fallback`.
    pub fn per_robot(&self, robots_caps: &[f64], fallback: &ChannelModel) -> Vec<f64> {
        match *self {
            AveragePower::Analytic { model } => robots_caps
                .iter()
                .map(|&cap| model.mean_truncated_power(cap))
                .collect(),
            AveragePower::Measured { state, t_c } => state
                .robots
                .iter()
                .enumerate()
                .map(|(n, r)| {
                    let w = state.selections[n];
                    if w == 0 || t_c <= 0.0 {
                        fallback.mean_truncated_power(r.power_cap)
                    } else {
                        (state.transmit_energy[n] - w as f64 * r.coding_cost) / (w as f64 * t_c)
                    }
                })
                .collect(),
        }
    }
}

/// Total-energy bound that holds for any subset schedule: every completed
/// task costs at least the task energy of all robots plus the cheapest
/// subset upload at `upload_power`.
pub fn bound_energy_budget(
    state: &SwarmState,
    sys: &SubsetSystem,
    upload_power: f64,
    t_c: f64,
) -> Result<u64, BoundsError> {
    let task: f64 = state.robots.iter().map(|r| r.task_cost).sum();
    let cheapest_upload = sys
        .subsets()
        .iter()
        .map(|s| {
            s.iter()
                .map(|&n| upload_power * t_c + state.robots[n].coding_cost)
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    let per_task = task
        + if cheapest_upload.is_finite() {
            cheapest_upload
        } else {
            0.0
        };
    if per_task <= 0.0 {
        return Err(BoundsError::Unbounded);
    }
    Ok((state.total_remaining() / per_task).floor() as u64)
}
