//! Centralized search engines a mediator runs over its session.
//!
//! A mediator hands over a [`SubProblem`] and receives a [`SolveOutcome`].
//! Any replacement solver has to honor the same contract: every returned
//! assignment satisfies all in-session constraints, and `NoSolution` means
//! no such assignment exists.

pub mod bnb;
pub mod flow;

use std::collections::{BTreeMap, BTreeSet};

use crate::csp::{compatible, Assignment, Relation, Value, VariableId};

pub use bnb::{branch_and_bound, BranchAndBound};
pub use flow::{
    build_flow_network, extract_assignment, ford_fulkerson, FlowNetwork, FlowOutcome, FlowSolver,
    FlowTarget, PathStrategy,
};

/// One in-session variable.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionVar {
    pub id: VariableId,
    /// Ordered domain; element 0 is the variable's current value.
    pub domain: Vec<Value>,
    /// Outside agents each value would conflict with, aligned with `domain`.
    pub labels: Vec<BTreeSet<VariableId>>,
}

impl SessionVar {
    /// Builds a session variable from an unordered labeled domain, moving the
    /// current value to the front.
    pub fn new(
        id: VariableId,
        current: &Value,
        labeled: impl IntoIterator<Item = (Value, BTreeSet<VariableId>)>,
    ) -> SessionVar {
        let mut pairs: Vec<(Value, BTreeSet<VariableId>)> = labeled.into_iter().collect();
        if let Some(pos) = pairs.iter().position(|(v, _)| v == current) {
            let cur = pairs.remove(pos);
            pairs.insert(0, cur);
        }
        let (domain, labels) = pairs.into_iter().unzip();
        SessionVar { id, domain, labels }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubProblem {
    pub relation: Relation,
    /// Sorted by id.
    pub variables: Vec<SessionVar>,
    /// Hard constraints between in-session variables.
    pub constraints: Vec<(VariableId, VariableId)>,
    /// Values of agents outside the session that cannot change.
    pub fixed: BTreeMap<VariableId, Value>,
    /// Known constraints between an in-session variable and a fixed one.
    pub outside_constraints: Vec<(VariableId, VariableId)>,
}

impl SubProblem {
    pub fn ids(&self) -> BTreeSet<VariableId> {
        self.variables.iter().map(|v| v.id).collect()
    }

    pub fn index_of(&self, x: VariableId) -> Option<usize> {
        self.variables.binary_search_by_key(&x, |v| v.id).ok()
    }

    /// Names of outside agents violated when variable `var` takes its
    /// `value`-th domain element: the value's label set minus session
    /// members, plus fixed agents whose known constraint it breaks.
    pub fn outside_conflicts(&self, var: usize, value: usize) -> BTreeSet<VariableId> {
        let sv = &self.variables[var];
        let v = &sv.domain[value];
        let mut names: BTreeSet<VariableId> = sv.labels[value]
            .iter()
            .copied()
            .filter(|x| self.index_of(*x).is_none())
            .collect();
        for &(a, k) in &self.outside_constraints {
            if a == sv.id {
                if let Some(fv) = self.fixed.get(&k) {
                    if !compatible(self.relation, v, fv) {
                        names.insert(k);
                    }
                }
            }
        }
        names
    }

    /// Outside cost table, `[var][value]`.
    pub fn cost_table(&self) -> Vec<Vec<u32>> {
        (0..self.variables.len())
            .map(|i| {
                (0..self.variables[i].domain.len())
                    .map(|j| self.outside_conflicts(i, j).len() as u32)
                    .collect()
            })
            .collect()
    }

    /// In-session neighbors by variable index.
    pub fn session_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.variables.len()];
        for &(a, b) in &self.constraints {
            if let (Some(i), Some(j)) = (self.index_of(a), self.index_of(b)) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// True iff `a` satisfies every in-session constraint.
    pub fn satisfies_session(&self, a: &Assignment) -> bool {
        self.constraints
            .iter()
            .all(|(x, y)| match (a.get(x), a.get(y)) {
                (Some(vx), Some(vy)) => compatible(self.relation, vx, vy),
                _ => false,
            })
    }

    /// Total outside cost of a full session assignment.
    pub fn outside_cost(&self, a: &Assignment) -> Option<u32> {
        let mut total = 0;
        for (i, sv) in self.variables.iter().enumerate() {
            let v = a.get(&sv.id)?;
            let j = sv.domain.iter().position(|d| d == v)?;
            total += self.outside_conflicts(i, j).len() as u32;
        }
        Some(total)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveOutcome {
    Solution {
        assignment: Assignment,
        outside_cost: u32,
    },
    NoSolution,
}

/// The plug-in boundary between a mediator and its centralized search.
pub trait CentralSolver: Send + Sync {
    /// `work` accumulates an abstract effort count (search nodes plus
    /// constraint checks).
    fn solve(&self, sp: &SubProblem, work: &mut u64) -> SolveOutcome;
}
