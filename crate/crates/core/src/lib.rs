//! Lifetime-aware subset selection for robot swarms uploading to an edge
//! server.
//!
//! The crate models robots with finite batteries, forms overlapping robot
//! subsets, partitions the subset-overlap graph with least-degree iterative
//! partitioning (LDIP), simulates task-by-task energy drain under AWGN and
//! Rayleigh channels, and evaluates analytical lifetime bounds.

pub mod bounds;
pub mod channel;
pub mod engine;
pub mod experiment;
pub mod generator;
pub mod graph;
pub mod model;
pub mod seed;
pub mod strategy;

pub use channel::{ChannelKind, ChannelModel};
pub use engine::{
    exhaustive_optimal_lifetime, run_lifetime, LifetimeRecord, OnInfeasible, RunParams, Termination,
};
pub use experiment::{run_experiment, summarize, RunConfig};
pub use generator::generate_subsets;
pub use graph::{build_subset_graph, ldip_partition, Partition, SubsetGraph, TieBreak};
pub use model::{new_swarm, Robot, SubsetSystem, SwarmState};
pub use strategy::StrategyKind;
