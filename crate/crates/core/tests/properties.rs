mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use swarm_lifetime::bounds::{bound_line_search, bound_line_search_identical};
use swarm_lifetime::engine::{run_lifetime, OnInfeasible, RunParams, Termination};
use swarm_lifetime::generator::generate_subsets;
use swarm_lifetime::graph::{
    build_subset_graph, count_max_subgraphs_bruteforce, ldip_partition, SubsetGraph, TieBreak,
};
use swarm_lifetime::model::{SwarmState, TaskOutcome};
use swarm_lifetime::seed;
use swarm_lifetime::strategy::StrategyKind;

use common::*;

fn strategy_kind() -> impl Strategy<Value = StrategyKind> {
    prop::sample::select(StrategyKind::ALL.to_vec())
}

fn dyadic() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.0, 0.25, 0.5, 1.0, 2.0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generated_systems_are_valid(n in 3usize..40, k in 1usize..8, extra in 0usize..4, s in any::<u64>()) {
        prop_assume!(k <= n);
        let m = n.div_ceil(k) + extra;
        let sys = generate_subsets(n, m, k, s).unwrap();
        prop_assert!(sys.validate().is_empty());
        prop_assert_eq!(sys.len(), m);
        prop_assert_eq!(&sys, &generate_subsets(n, m, k, s).unwrap());
    }

    #[test]
    fn ldip_output_is_valid_and_never_beats_bruteforce(
        n in 1usize..=10,
        p in 0.0f64..=1.0,
        s in any::<u64>(),
        lowest in any::<bool>(),
    ) {
        let g = SubsetGraph::erdos_renyi(n, p, &mut seed::rng(s));
        let tie = if lowest { TieBreak::LowestIndex } else { TieBreak::Random(s) };
        let part = ldip_partition(&g, tie);
        prop_assert_eq!(part.validate(&g), vec![]);
        prop_assert!(part.len() <= count_max_subgraphs_bruteforce(&g).unwrap());
        prop_assert_eq!(&part, &ldip_partition(&g, tie));
    }

    #[test]
    fn runs_conserve_energy(
        n in 3usize..9,
        m in 1usize..5,
        e0 in 20u32..200,
        eps_t in dyadic(),
        eps_c in dyadic(),
        kind in strategy_kind(),
        rayleigh_channel in any::<bool>(),
        skip in any::<bool>(),
        s in any::<u64>(),
    ) {
        let mut rng = seed::rng(s);
        let sys = random_system(&mut rng, n, m);
        let part = ldip_partition(&build_subset_graph(&sys), TieBreak::Random(s));
        let initial = swarm(&vec![f64::from(e0); n], eps_t, eps_c, 30.0);
        let params = RunParams {
            strategy: kind,
            model: if rayleigh_channel { rayleigh() } else { awgn() },
            t_c: 1.0,
            channel_seed: s,
            max_tasks: Some(500),
            on_infeasible: if skip { OnInfeasible::Skip } else { OnInfeasible::Terminate },
        };
        let rec = run_lifetime(&sys, Some(&part), &initial, &params).unwrap();
        let st = &rec.final_state;
        prop_assert!(st.conservation_error() <= 1e-9);
        prop_assert!(st.robots.iter().all(|r| r.remaining_energy >= 0.0));
        for (n, r) in st.robots.iter().enumerate() {
            let lhs = r.initial_energy - r.remaining_energy;
            let rhs = st.transmit_energy[n] + (st.task_index + st.skipped) as f64 * eps_t;
            prop_assert!((lhs - rhs).abs() <= 1e-9 * r.initial_energy.max(1.0));
        }
        prop_assert_eq!(rec.lifetime as usize, rec.schedule.len());
        if let Termination::EnergyDepleted(robot) = rec.termination {
            prop_assert!(robot < n);
        }
    }

    #[test]
    fn awgn_schedule_replays_to_the_same_state(
        n in 3usize..9,
        m in 1usize..5,
        e0 in 20u32..200,
        eps_t in dyadic(),
        eps_c in dyadic(),
        kind in strategy_kind(),
        s in any::<u64>(),
    ) {
        let mut rng = seed::rng(s);
        let sys = random_system(&mut rng, n, m);
        let part = ldip_partition(&build_subset_graph(&sys), TieBreak::Random(s));
        let initial = swarm(&vec![f64::from(e0); n], eps_t, eps_c, 30.0);
        let model = awgn();
        let params = RunParams {
            strategy: kind,
            model: model.clone(),
            t_c: 1.0,
            channel_seed: s,
            max_tasks: None,
            on_infeasible: OnInfeasible::Terminate,
        };
        let rec = run_lifetime(&sys, Some(&part), &initial, &params).unwrap();

        let mut state: SwarmState = initial.clone();
        let mut total = state.total_remaining();
        for subset in &rec.schedule {
            let robots = match subset {
                Some(j) => sys.subset(*j).clone(),
                None => (0..n).collect(),
            };
            let powers: BTreeMap<usize, f64> =
                robots.iter().map(|&r| (r, model.reference_power())).collect();
            match state.apply_task(&robots, &powers, 1.0).unwrap() {
                TaskOutcome::Completed(next) => state = next,
                TaskOutcome::Terminated { .. } => prop_assert!(false, "replay terminated early"),
            }
            prop_assert!(state.total_remaining() < total);
            total = state.total_remaining();
        }
        prop_assert_eq!(&state, &rec.final_state);
    }

    #[test]
    fn round_robin_counts_stay_balanced(groups in 1usize..6, size in 1usize..4, e0 in 10u32..300) {
        let sys = equal_disjoint_system(groups * size, groups);
        prop_assume!(groups * size >= 3);
        let part = ldip_partition(&build_subset_graph(&sys), TieBreak::LowestIndex);
        let initial = swarm(&vec![f64::from(e0); groups * size], 0.0, 0.0, 30.0);
        let params = RunParams {
            strategy: StrategyKind::LdipRVertices,
            model: awgn(),
            t_c: 1.0,
            channel_seed: 0,
            max_tasks: None,
            on_infeasible: OnInfeasible::Terminate,
        };
        let rec = run_lifetime(&sys, Some(&part), &initial, &params).unwrap();
        let mut uses = vec![0u64; groups];
        for (i, subset) in rec.schedule.iter().enumerate() {
            uses[subset.unwrap()] += 1;
            let (lo, hi) = (uses.iter().min().unwrap(), uses.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "after {} tasks: {:?}", i + 1, uses);
        }
    }

    #[test]
    fn line_search_is_monotone(
        mins in prop::collection::vec(0u32..300, 1..6),
        bump in 0usize..6,
        c in 1u32..20,
        eps in 0u32..4,
    ) {
        let mins: Vec<f64> = mins.into_iter().map(f64::from).collect();
        let (c, eps) = (f64::from(c), f64::from(eps));
        let base = bound_line_search(&mins, c, 0.0, eps).unwrap();
        let mut raised = mins.clone();
        raised[bump % mins.len()] += 25.0;
        prop_assert!(bound_line_search(&raised, c, 0.0, eps).unwrap() >= base);
        let mut more = mins.clone();
        more.push(mins[0]);
        prop_assert!(bound_line_search(&more, c, 0.0, eps).unwrap() >= base);
        prop_assert!(
            bound_line_search_identical(mins[0], mins.len() + 1, c, 0.0, eps).unwrap()
                >= bound_line_search_identical(mins[0], mins.len(), c, 0.0, eps).unwrap()
        );
    }
}

#[test]
fn trial_seeds_are_distinct_across_the_sweep() {
    let mut seen = std::collections::HashSet::new();
    for m in 4..=8 {
        for t in 0..500 {
            assert!(seen.insert(seed::trial_seed(2020, m, t)));
        }
    }
}
