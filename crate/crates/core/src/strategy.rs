//! Per-task subset selection policies.
//!
//! * `Conventional`: every robot uploads every task.
//! * `MaxMin`: among feasible subsets, the one whose choice leaves the highest
//!   swarm-wide minimum residual energy after the task (greedy one-step
//!   lookahead; ties go to the lowest subset index).
//! * `LdipRVertices`: only R-Vertex subsets. Round robin over subgraphs in
//!   AWGN, the max-min rule in fading.
//! * `LdipAll`: max-min over feasible R-Vertex subsets, falling back to the
//!   remaining subsets when none of them is feasible.
//!
//! Every policy filters by capacity outage first; no robot is ever asked to
//! transmit above its cap.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{feasible_subset, ChannelDraw, ChannelKind, ChannelModel};
use crate::graph::Partition;
use crate::model::{RobotId, SubsetSystem, SwarmState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "conventional")]
    Conventional,
    #[serde(rename = "maxmin")]
    MaxMin,
    #[serde(rename = "ldip-r")]
    LdipRVertices,
    #[serde(rename = "ldip-all")]
    LdipAll,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Conventional,
        StrategyKind::MaxMin,
        StrategyKind::LdipRVertices,
        StrategyKind::LdipAll,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyKind::Conventional => "conventional",
            StrategyKind::MaxMin => "maxmin",
            StrategyKind::LdipRVertices => "ldip-r",
            StrategyKind::LdipAll => "ldip-all",
        }
    }

    pub fn needs_partition(&self) -> bool {
        matches!(self, StrategyKind::LdipRVertices | StrategyKind::LdipAll)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                format!(
                    "unknown strategy `{s}` (expected conventional | maxmin | ldip-r | ldip-all)"
                )
            })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrategyError {
    #[error("strategy {0} needs a non-empty partition")]
    MissingPartition(StrategyKind),
    #[error("partition references vertex {vertex} but the system has {subsets} subsets")]
    PartitionMismatch { vertex: usize, subsets: usize },
}

/// Robots chosen for one task with their adapted transmit powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Chosen subset, `None` for the whole swarm.
    pub subset: Option<usize>,
    pub robots: BTreeSet<RobotId>,
    pub powers: BTreeMap<RobotId, f64>,
}

/// No candidate passes the capacity check for this task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoFeasibleChoice;

/// Endless cyclic walk over subgraph indices `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRobinCursor {
    len: usize,
    next: usize,
}

impl RoundRobinCursor {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "round robin over zero subgraphs");
        RoundRobinCursor { len, next: 0 }
    }

    pub fn peek(&self) -> usize {
        self.next
    }
}

impl Iterator for RoundRobinCursor {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let out = self.next;
        self.next = (self.next + 1) % self.len;
        Some(out)
    }
}

pub fn round_robin_cursor(partition: &Partition) -> RoundRobinCursor {
    RoundRobinCursor::new(partition.len())
}

/// Per-run selection state: the policy, its R-Vertex subsets and the round
/// robin position.
#[derive(Debug, Clone)]
pub struct Selector {
    kind: StrategyKind,
    t_c: f64,
    /// R-Vertex subset indices in extraction order.
    r_subsets: Vec<usize>,
    /// Every other subset index, ascending.
    other_subsets: Vec<usize>,
    cursor: Option<RoundRobinCursor>,
}

impl Selector {
    pub fn new(
        kind: StrategyKind,
        sys: &SubsetSystem,
        partition: Option<&Partition>,
        t_c: f64,
    ) -> Result<Self, StrategyError> {
        let (r_subsets, cursor) = if kind.needs_partition() {
            let p = partition
                .filter(|p| !p.is_empty())
                .ok_or(StrategyError::MissingPartition(kind))?;
            if let Some(&vertex) = p
                .subgraphs
                .iter()
                .flat_map(|s| s.members.iter().chain([&s.r_vertex]))
                .find(|&&v| v >= sys.len())
            {
                return Err(StrategyError::PartitionMismatch {
                    vertex,
                    subsets: sys.len(),
                });
            }
            (p.r_vertices(), Some(round_robin_cursor(p)))
        } else {
            (Vec::new(), None)
        };
        let other_subsets = (0..sys.len()).filter(|m| !r_subsets.contains(m)).collect();
        Ok(Selector {
            kind,
            t_c,
            r_subsets,
            other_subsets,
            cursor,
        })
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn select(
        &mut self,
        state: &SwarmState,
        sys: &SubsetSystem,
        draw: &ChannelDraw,
        model: &ChannelModel,
    ) -> Result<Selection, NoFeasibleChoice> {
        let caps: Vec<f64> = state.robots.iter().map(|r| r.power_cap).collect();
        match self.kind {
            StrategyKind::Conventional => {
                let robots: BTreeSet<RobotId> = (0..state.n_robots()).collect();
                let powers =
                    feasible_subset(draw, &robots, model, &caps).map_err(|_| NoFeasibleChoice)?;
                Ok(Selection {
                    subset: None,
                    robots,
                    powers,
                })
            }
            StrategyKind::MaxMin => {
                let all: Vec<usize> = (0..sys.len()).collect();
                self.max_min(&all, state, sys, draw, model, &caps)
            }
            StrategyKind::LdipRVertices if model.kind == ChannelKind::Awgn => {
                let cursor = self.cursor.as_mut().expect("LDIP selector without cursor");
                let m = self.r_subsets[cursor.peek()];
                let powers = feasible_subset(draw, sys.subset(m), model, &caps)
                    .map_err(|_| NoFeasibleChoice)?;
                cursor.next();
                Ok(Selection {
                    subset: Some(m),
                    robots: sys.subset(m).clone(),
                    powers,
                })
            }
            StrategyKind::LdipRVertices => {
                let mut candidates = self.r_subsets.clone();
                candidates.sort_unstable();
                self.max_min(&candidates, state, sys, draw, model, &caps)
            }
            StrategyKind::LdipAll => {
                let mut candidates = self.r_subsets.clone();
                candidates.sort_unstable();
                self.max_min(&candidates, state, sys, draw, model, &caps)
                    .or_else(|_| self.max_min(&self.other_subsets, state, sys, draw, model, &caps))
            }
        }
    }

    /// Max-min rule over `candidates` (ascending subset indices).
    fn max_min(
        &self,
        candidates: &[usize],
        state: &SwarmState,
        sys: &SubsetSystem,
        draw: &ChannelDraw,
        model: &ChannelModel,
        caps: &[f64],
    ) -> Result<Selection, NoFeasibleChoice> {
        let idle: Vec<f64> = state
            .robots
            .iter()
            .map(|r| r.remaining_energy - r.task_cost)
            .collect();
        let mut best: Option<(f64, usize, BTreeMap<RobotId, f64>)> = None;
        for &m in candidates {
            let Ok(powers) = feasible_subset(draw, sys.subset(m), model, caps) else {
                continue;
            };
            let value = projected_minimum(state, &idle, &powers, self.t_c);
            if best.as_ref().is_none_or(|(v, _, _)| value > *v) {
                best = Some((value, m, powers));
            }
        }
        let (_, m, powers) = best.ok_or(NoFeasibleChoice)?;
        Ok(Selection {
            subset: Some(m),
            robots: sys.subset(m).clone(),
            powers,
        })
    }
}

/// Swarm-wide minimum remaining energy if the robots in `powers` transmit.
fn projected_minimum(
    state: &SwarmState,
    idle: &[f64],
    powers: &BTreeMap<RobotId, f64>,
    t_c: f64,
) -> f64 {
    idle.iter()
        .enumerate()
        .map(|(n, &e)| match powers.get(&n) {
            Some(p) => e - p * t_c - state.robots[n].coding_cost,
            None => e,
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_subset_graph, ldip_partition, TieBreak};
    use crate::model::{new_swarm, TaskOutcome};

    fn awgn() -> ChannelModel {
        ChannelModel::at_reference(ChannelKind::Awgn, 10.0).unwrap()
    }

    fn disjoint(m: usize, size: usize) -> SubsetSystem {
        SubsetSystem::new(
            m * size,
            size,
            (0..m)
                .map(|i| (i * size..(i + 1) * size).collect())
                .collect(),
        )
    }

    #[test]
    fn cursor_cycles() {
        let c = RoundRobinCursor::new(3);
        assert_eq!(c.take(7).collect::<Vec<_>>(), vec![0, 1, 2, 0, 1, 2, 0]);
        let one = RoundRobinCursor::new(1);
        assert_eq!(one.take(4).collect::<Vec<_>>(), vec![0; 4]);
    }

    #[test]
    fn cursor_counts_balance() {
        let mut counts = [0; 3];
        for i in RoundRobinCursor::new(3).take(7) {
            counts[i] += 1;
        }
        // ceil(7/3) = 3, floor(7/3) = 2.
        assert_eq!(counts, [3, 2, 2]);
    }

    #[test]
    fn parse_names() {
        for k in StrategyKind::ALL {
            assert_eq!(k.as_str().parse::<StrategyKind>(), Ok(k));
        }
        assert!("ldip".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn ldip_requires_partition() {
        let sys = disjoint(2, 2);
        assert_eq!(
            Selector::new(StrategyKind::LdipAll, &sys, None, 1.0).unwrap_err(),
            StrategyError::MissingPartition(StrategyKind::LdipAll)
        );
    }

    #[test]
    fn ldip_r_round_robins_disjoint_subsets() {
        let sys = disjoint(4, 2);
        let p = ldip_partition(&build_subset_graph(&sys), TieBreak::LowestIndex);
        let mut sel = Selector::new(StrategyKind::LdipRVertices, &sys, Some(&p), 1.0).unwrap();
        let mut state = new_swarm(8, 1000.0, 0.0, 0.0, 30.0).unwrap();
        let model = awgn();
        let draw = ChannelDraw::awgn(8);
        let mut picks = Vec::new();
        for _ in 0..9 {
            let s = sel.select(&state, &sys, &draw, &model).unwrap();
            picks.push(s.subset.unwrap());
            let TaskOutcome::Completed(next) = state.apply_task(&s.robots, &s.powers, 1.0).unwrap()
            else {
                panic!()
            };
            state = next;
        }
        assert_eq!(picks, vec![0, 1, 2, 3, 0, 1, 2, 3, 0]);
    }

    #[test]
    fn conventional_selects_everybody() {
        let sys = disjoint(2, 2);
        let state = new_swarm(4, 100.0, 0.0, 0.0, 30.0).unwrap();
        let mut sel = Selector::new(StrategyKind::Conventional, &sys, None, 1.0).unwrap();
        let s = sel
            .select(&state, &sys, &ChannelDraw::awgn(4), &awgn())
            .unwrap();
        assert_eq!(s.robots.len(), 4);
        assert!(s.powers.values().all(|&p| p == 10.0));
    }

    #[test]
    fn max_min_prefers_stronger_weakest_member() {
        let sys = disjoint(2, 2);
        let mut state = new_swarm(4, 100.0, 0.0, 0.0, 30.0).unwrap();
        state.robots[0].remaining_energy = 5.0;
        state.robots[2].remaining_energy = 50.0;
        let mut sel = Selector::new(StrategyKind::MaxMin, &sys, None, 1.0).unwrap();
        let s = sel
            .select(&state, &sys, &ChannelDraw::awgn(4), &awgn())
            .unwrap();
        assert_eq!(s.subset, Some(1));
    }

    #[test]
    fn ldip_all_falls_back_to_other_subsets() {
        // Subsets {0,1}, {1,2}, {2,3}: path graph; lowest-index LDIP picks
        // R-Vertices 0 and 2, leaving subset 1 as the only non-R vertex.
        let sys = SubsetSystem::new(4, 2, vec![[0, 1].into(), [1, 2].into(), [2, 3].into()]);
        let p = ldip_partition(&build_subset_graph(&sys), TieBreak::LowestIndex);
        assert_eq!(p.r_vertices(), vec![0, 2]);
        let model = ChannelModel::at_reference(ChannelKind::Rayleigh, 10.0).unwrap();
        let state = new_swarm(4, 100.0, 0.0, 0.0, 30.0).unwrap();
        // Robots 0 and 3 in deep fade: both R-Vertex subsets are in outage.
        let draw = ChannelDraw {
            gains: vec![0.01, 1.0, 1.0, 0.01],
        };

        let mut all = Selector::new(StrategyKind::LdipAll, &sys, Some(&p), 1.0).unwrap();
        assert_eq!(
            all.select(&state, &sys, &draw, &model).unwrap().subset,
            Some(1)
        );
        let mut r_only = Selector::new(StrategyKind::LdipRVertices, &sys, Some(&p), 1.0).unwrap();
        assert_eq!(
            r_only.select(&state, &sys, &draw, &model),
            Err(NoFeasibleChoice)
        );
    }
}
