//! Depth-first branch and bound: hard in-session constraints, minimum
//! outside-violation cost.

use crate::csp::{compatible, Assignment};

use super::{CentralSolver, SolveOutcome, SubProblem};

/// Branch and bound with a zero lookahead bound. Variables are visited in id
/// order and values in domain order (current value first), so the incumbent
/// assignment is the first leaf tried.
#[derive(Clone, Copy, Debug, Default)]
pub struct BranchAndBound;

impl CentralSolver for BranchAndBound {
    fn solve(&self, sp: &SubProblem, work: &mut u64) -> SolveOutcome {
        branch_and_bound(sp, work)
    }
}

pub fn branch_and_bound(sp: &SubProblem, work: &mut u64) -> SolveOutcome {
    let n = sp.variables.len();
    if n == 0 {
        return SolveOutcome::Solution {
            assignment: Assignment::new(),
            outside_cost: 0,
        };
    }
    let costs = sp.cost_table();
    let adj = sp.session_adjacency();
    let mut best: Option<(Vec<usize>, u32)> = None;
    let mut chosen = vec![0usize; n];
    let mut partial = vec![0u32; n + 1];
    let mut depth = 0usize;
    loop {
        if chosen[depth] >= sp.variables[depth].domain.len() {
            if depth == 0 {
                break;
            }
            depth -= 1;
            chosen[depth] += 1;
            continue;
        }
        *work += 1;
        let vi = chosen[depth];
        let value = &sp.variables[depth].domain[vi];
        let consistent = adj[depth].iter().filter(|&&j| j < depth).all(|&j| {
            *work += 1;
            compatible(sp.relation, value, &sp.variables[j].domain[chosen[j]])
        });
        let cost = partial[depth] + costs[depth][vi];
        let bounded = best.as_ref().is_some_and(|(_, b)| cost >= *b);
        if !consistent || bounded {
            chosen[depth] += 1;
            continue;
        }
        if depth + 1 == n {
            best = Some((chosen.clone(), cost));
            if cost == 0 {
                break;
            }
            chosen[depth] += 1;
            continue;
        }
        partial[depth + 1] = cost;
        depth += 1;
        chosen[depth] = 0;
    }
    match best {
        None => SolveOutcome::NoSolution,
        Some((choice, cost)) => SolveOutcome::Solution {
            assignment: sp
                .variables
                .iter()
                .zip(choice)
                .map(|(v, i)| (v.id, v.domain[i].clone()))
                .collect(),
            outside_cost: cost,
        },
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use super::*;
    use crate::csp::{Relation, Value, VariableId};
    use crate::solvers::SessionVar;

    fn colors(k: u32) -> Vec<Value> {
        (0..k).map(Value::Color).collect()
    }

    fn var(id: u32, current: u32, k: u32) -> SessionVar {
        SessionVar::new(
            VariableId(id),
            &Value::Color(current),
            colors(k).into_iter().map(|v| (v, BTreeSet::new())),
        )
    }

    fn sp(vars: Vec<SessionVar>, edges: &[(u32, u32)]) -> SubProblem {
        SubProblem {
            relation: Relation::NotEquals,
            variables: vars,
            constraints: edges
                .iter()
                .map(|&(a, b)| (VariableId(a), VariableId(b)))
                .collect(),
            fixed: BTreeMap::new(),
            outside_constraints: vec![],
        }
    }

    #[test]
    fn incumbent_is_kept_when_consistent() {
        let p = sp(
            vec![var(0, 2, 3), var(1, 0, 3), var(2, 1, 3)],
            &[(0, 1), (1, 2), (0, 2)],
        );
        let mut work = 0;
        match branch_and_bound(&p, &mut work) {
            SolveOutcome::Solution {
                assignment,
                outside_cost,
            } => {
                assert_eq!(outside_cost, 0);
                assert_eq!(assignment[&VariableId(0)], Value::Color(2));
                assert_eq!(assignment[&VariableId(1)], Value::Color(0));
                assert_eq!(assignment[&VariableId(2)], Value::Color(1));
            }
            SolveOutcome::NoSolution => panic!(),
        }
        // root path only: three nodes plus three constraint checks
        assert_eq!(work, 6);
    }

    #[test]
    fn k4_has_no_solution() {
        let p = sp(
            (0..4).map(|i| var(i, 0, 3)).collect(),
            &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        );
        assert_eq!(branch_and_bound(&p, &mut 0), SolveOutcome::NoSolution);
    }

    #[test]
    fn second_walkthrough_mediation_picks_red_for_nd3() {
        // Labeled domains returned to ND3 in the second session; ND3 holds
        // Black, ND1 Black, ND5 Blue, ND6 Black, ND7 Blue.
        let (black, red, blue) = (Value::Color(0), Value::Color(1), Value::Color(2));
        let ids = |xs: &[u32]| xs.iter().map(|&x| VariableId(x)).collect::<BTreeSet<_>>();
        let nd1 = SessionVar::new(
            VariableId(1),
            &black,
            [
                (black.clone(), ids(&[3])),
                (red.clone(), ids(&[0, 4])),
                (blue.clone(), ids(&[2])),
            ],
        );
        let nd3 = SessionVar::new(
            VariableId(3),
            &black,
            [
                (black.clone(), ids(&[1, 5, 6])),
                (red.clone(), ids(&[])),
                (blue.clone(), ids(&[5, 7])),
            ],
        );
        let nd5 = SessionVar::new(
            VariableId(5),
            &blue,
            [
                (black.clone(), ids(&[3])),
                (red.clone(), ids(&[])),
                (blue.clone(), ids(&[])),
            ],
        );
        let nd6 = SessionVar::new(
            VariableId(6),
            &black,
            [
                (black.clone(), ids(&[3])),
                (red.clone(), ids(&[4])),
                (blue.clone(), ids(&[7])),
            ],
        );
        let nd7 = SessionVar::new(
            VariableId(7),
            &blue,
            [
                (black.clone(), ids(&[3, 6])),
                (red.clone(), ids(&[4])),
                (blue.clone(), ids(&[])),
            ],
        );
        let p = sp(
            vec![nd1, nd3, nd5, nd6, nd7],
            &[(1, 3), (3, 5), (3, 6), (3, 7), (6, 7)],
        );
        match branch_and_bound(&p, &mut 0) {
            SolveOutcome::Solution {
                assignment,
                outside_cost,
            } => {
                assert_eq!(assignment[&VariableId(3)], red);
                assert_eq!(outside_cost, 0);
                for x in [1, 5, 6, 7] {
                    let before = &p.variables[p.index_of(VariableId(x)).unwrap()].domain[0];
                    assert_eq!(&assignment[&VariableId(x)], before);
                }
            }
            SolveOutcome::NoSolution => panic!(),
        }
    }

    #[test]
    fn fixed_context_counts_as_cost() {
        // x0 in session, currently 0; fixed x9 = 0 shares a constraint
        let mut p = sp(vec![var(0, 0, 3)], &[]);
        p.fixed.insert(VariableId(9), Value::Color(0));
        p.outside_constraints.push((VariableId(0), VariableId(9)));
        match branch_and_bound(&p, &mut 0) {
            SolveOutcome::Solution {
                assignment,
                outside_cost,
            } => {
                assert_eq!(outside_cost, 0);
                assert_eq!(assignment[&VariableId(0)], Value::Color(1));
            }
            SolveOutcome::NoSolution => panic!(),
        }
    }
}
