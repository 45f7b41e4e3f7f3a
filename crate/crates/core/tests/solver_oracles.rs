//! Centralized solvers against exhaustive oracles on small random inputs.

mod common;

use apo_dcsp::csp::{brute_force, CspInstance};
use apo_dcsp::generators::rng_from_seed;
use apo_dcsp::solvers::flow::solve_sensor_instance;
use apo_dcsp::solvers::FlowOutcome;

#[test]
fn branch_and_bound_matches_enumeration_on_1000_subproblems() {
    common::check_branch_and_bound(0x0b_b0, 1000).unwrap();
}

#[test]
fn ford_fulkerson_matches_exhaustive_matching_on_500_fields() {
    common::check_flow(0xf10e, 500).unwrap();
}

#[test]
fn whole_instance_flow_agrees_with_brute_force() {
    let mut rng = rng_from_seed(0x5e45);
    for case in 0..200 {
        let visible = common::random_field(&mut rng);
        let mut edges = Vec::new();
        for a in 0..visible.len() {
            for b in a + 1..visible.len() {
                if visible[a].iter().any(|s| visible[b].contains(s)) {
                    edges.push((a as u32, b as u32));
                }
            }
        }
        let inst = CspInstance::sensor(visible.clone(), &edges).unwrap();
        let by_search = brute_force(&inst, 1 << 30).unwrap().is_satisfiable();
        let by_flow = matches!(solve_sensor_instance(&inst), Some(FlowOutcome::Solution(_)));
        assert_eq!(by_flow, by_search, "case {case}: {visible:?}");
    }
}
