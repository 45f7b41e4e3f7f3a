//! Exhaustive oracles for the centralized solvers, shared by several test
//! targets.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use apo_dcsp::csp::{Relation, Value, VariableId};
use apo_dcsp::generators::rng_from_seed;
use apo_dcsp::solvers::{
    branch_and_bound, build_flow_network, extract_assignment, ford_fulkerson, FlowOutcome,
    FlowTarget, PathStrategy, SessionVar, SolveOutcome, SubProblem,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_subproblem(rng: &mut ChaCha8Rng) -> SubProblem {
    let n = rng.gen_range(1..=6);
    let k = rng.gen_range(2..=3u32);
    let ids: Vec<VariableId> = (0..n).map(|i| VariableId(i * 2)).collect();
    let outside: Vec<VariableId> = (0..4).map(|i| VariableId(100 + i)).collect();
    let mut variables: Vec<SessionVar> = ids
        .iter()
        .map(|&id| {
            let mut domain: Vec<Value> = (0..k).map(Value::Color).collect();
            domain.shuffle(rng);
            let labels = domain
                .iter()
                .map(|_| {
                    // Labels may also name session members; those never count.
                    let pool: Vec<VariableId> = outside.iter().chain(ids.iter()).copied().collect();
                    pool.into_iter().filter(|_| rng.gen_bool(0.2)).collect()
                })
                .collect();
            SessionVar { id, domain, labels }
        })
        .collect();
    variables.sort_by_key(|v| v.id);
    let mut constraints = Vec::new();
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            if rng.gen_bool(0.5) {
                constraints.push((ids[i], ids[j]));
            }
        }
    }
    let fixed: BTreeMap<VariableId, Value> = (0..rng.gen_range(0..3u32))
        .map(|i| (VariableId(51 + 2 * i), Value::Color(rng.gen_range(0..k))))
        .collect();
    let mut outside_constraints = Vec::new();
    for &a in &ids {
        for &f in fixed.keys() {
            if rng.gen_bool(0.4) {
                outside_constraints.push((a, f));
            }
        }
    }
    SubProblem {
        relation: Relation::NotEquals,
        variables,
        constraints,
        fixed,
        outside_constraints,
    }
}

/// Outside cost of one variable taking one value, from the raw fields.
fn oracle_cost(sp: &SubProblem, var: &SessionVar, value: &Value) -> u32 {
    let members: BTreeSet<VariableId> = sp.variables.iter().map(|v| v.id).collect();
    let j = var.domain.iter().position(|d| d == value).unwrap();
    let mut names: BTreeSet<VariableId> = var.labels[j].difference(&members).copied().collect();
    for &(a, f) in &sp.outside_constraints {
        if a == var.id && sp.fixed.get(&f) == Some(value) {
            names.insert(f);
        }
    }
    names.len() as u32
}

/// Minimum outside cost over all assignments meeting every session
/// constraint, by full enumeration.
fn oracle_min(sp: &SubProblem) -> Option<u32> {
    let n = sp.variables.len();
    let mut idx = vec![0usize; n];
    let mut best = None;
    loop {
        let a: BTreeMap<VariableId, &Value> = sp
            .variables
            .iter()
            .zip(&idx)
            .map(|(v, &i)| (v.id, &v.domain[i]))
            .collect();
        if sp.constraints.iter().all(|(x, y)| a[x] != a[y]) {
            let cost: u32 = sp
                .variables
                .iter()
                .map(|v| oracle_cost(sp, v, a[&v.id]))
                .sum();
            best = Some(best.map_or(cost, |b: u32| b.min(cost)));
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            idx[pos] += 1;
            if idx[pos] < sp.variables[pos].domain.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Exhaustive search for disjoint sensor sets of size `min(|visible|, 3)`.
pub fn oracle_matching(visible: &[Vec<u32>]) -> bool {
    fn rec(visible: &[Vec<u32>], used: &mut BTreeSet<u32>) -> bool {
        let Some((first, rest)) = visible.split_first() else {
            return true;
        };
        let demand = first.len().min(3);
        let free: Vec<u32> = first
            .iter()
            .copied()
            .filter(|s| !used.contains(s))
            .collect();
        subsets(&free, demand).into_iter().any(|pick| {
            used.extend(&pick);
            let ok = rec(rest, used);
            for s in &pick {
                used.remove(s);
            }
            ok
        })
    }
    rec(visible, &mut BTreeSet::new())
}

fn subsets(items: &[u32], c: usize) -> Vec<Vec<u32>> {
    if c == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut tail in subsets(&items[i + 1..], c - 1) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

pub fn random_field(rng: &mut ChaCha8Rng) -> Vec<Vec<u32>> {
    let targets = rng.gen_range(1..=4);
    let sensors = rng.gen_range(1..=12 - targets) as u32;
    (0..targets)
        .map(|_| {
            let mut v: Vec<u32> = (0..sensors).filter(|_| rng.gen_bool(0.45)).collect();
            if v.is_empty() {
                v.push(rng.gen_range(0..sensors));
            }
            v
        })
        .collect()
}

fn check_allocation(visible: &[Vec<u32>], a: &BTreeMap<VariableId, Value>) -> Result<(), String> {
    let mut used = BTreeSet::new();
    for (i, vis) in visible.iter().enumerate() {
        let Value::Sensors(s) = &a[&VariableId(i as u32)] else {
            return Err(format!("target {i} holds a non-sensor value"));
        };
        if s.len() != vis.len().min(3) {
            return Err(format!("target {i} got {} sensors", s.len()));
        }
        for x in s {
            if !vis.contains(x) {
                return Err(format!("sensor {x} not visible to target {i}"));
            }
            if !used.insert(*x) {
                return Err(format!("sensor {x} assigned twice"));
            }
        }
    }
    Ok(())
}

/// Runs branch and bound against full enumeration on `cases` random
/// subproblems and returns how many were infeasible.
pub fn check_branch_and_bound(seed: u64, cases: usize) -> Result<usize, String> {
    let mut rng = rng_from_seed(seed);
    let mut infeasible = 0;
    for case in 0..cases {
        let sp = random_subproblem(&mut rng);
        let expected = oracle_min(&sp);
        match (branch_and_bound(&sp, &mut 0), expected) {
            (SolveOutcome::NoSolution, None) => infeasible += 1,
            (
                SolveOutcome::Solution {
                    assignment,
                    outside_cost,
                },
                Some(best),
            ) => {
                if outside_cost != best {
                    return Err(format!(
                        "case {case}: cost {outside_cost}, oracle {best}: {sp:?}"
                    ));
                }
                if assignment.len() != sp.variables.len() {
                    return Err(format!("case {case}: partial assignment {assignment:?}"));
                }
                if sp
                    .constraints
                    .iter()
                    .any(|(x, y)| assignment[x] == assignment[y])
                {
                    return Err(format!(
                        "case {case}: violated constraint in {assignment:?}"
                    ));
                }
                let recomputed: u32 = sp
                    .variables
                    .iter()
                    .map(|v| oracle_cost(&sp, v, &assignment[&v.id]))
                    .sum();
                if recomputed != best {
                    return Err(format!(
                        "case {case}: assignment costs {recomputed}, not {best}"
                    ));
                }
            }
            (got, want) => {
                return Err(format!(
                    "case {case}: solver {got:?}, oracle {want:?} for {sp:?}"
                ))
            }
        }
    }
    if infeasible == 0 {
        return Err("the sample should include infeasible sessions".into());
    }
    Ok(infeasible)
}

/// Runs max flow with every path strategy plus assignment extraction against
/// the exhaustive matching oracle and returns how many fields were feasible.
pub fn check_flow(seed: u64, cases: usize) -> Result<usize, String> {
    let mut rng = rng_from_seed(seed);
    let mut feasible = 0;
    for case in 0..cases {
        let visible = random_field(&mut rng);
        let expected = oracle_matching(&visible);
        let targets: Vec<FlowTarget> = visible
            .iter()
            .enumerate()
            .map(|(i, v)| FlowTarget::uncosted(VariableId(i as u32), v))
            .collect();
        let mut values = Vec::new();
        for strategy in [PathStrategy::Bfs, PathStrategy::Dfs, PathStrategy::MinCost] {
            let mut net = build_flow_network(&targets);
            values.push(ford_fulkerson(&mut net, strategy, &mut 0));
            net.check_invariants()
                .map_err(|e| format!("case {case} {strategy:?}: {e}"))?;
            match extract_assignment(&net) {
                FlowOutcome::Solution(a) => {
                    if !expected {
                        return Err(format!(
                            "case {case} {strategy:?}: flow found {a:?} for {visible:?}"
                        ));
                    }
                    check_allocation(&visible, &a)
                        .map_err(|e| format!("case {case} {strategy:?}: {e}"))?;
                }
                FlowOutcome::Unsatisfiable => {
                    if expected {
                        return Err(format!("case {case} {strategy:?}: flow missed {visible:?}"));
                    }
                }
            }
        }
        if values.windows(2).any(|w| w[0] != w[1]) {
            return Err(format!("case {case}: flow values differ {values:?}"));
        }
        feasible += usize::from(expected);
    }
    if feasible <= cases / 10 || feasible >= cases - cases / 10 {
        return Err(format!("{feasible} feasible of {cases}"));
    }
    Ok(feasible)
}
