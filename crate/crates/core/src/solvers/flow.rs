//! Sensor allocation as feasible flow.
//!
//! Network layout: `s` and `t`, one node per distinct sensor, one node per
//! target. Edges `(s, S)` and `(S, T)` carry capacity 1, `(T, t)` carries the
//! target's demand `min(|D_T|, 3)`. The allocation is feasible iff every
//! `(T, t)` edge saturates; unit sensor capacity makes the extracted sensor
//! sets pairwise disjoint.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::csp::{Assignment, Value, VariableId, SENSORS_PER_TARGET};

use super::{CentralSolver, SolveOutcome, SubProblem};

pub const SOURCE: usize = 0;
pub const SINK: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeRole {
    Source,
    Sink,
    Sensor(u32),
    Target(VariableId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub to: usize,
    pub cap: i64,
    pub flow: i64,
    /// External-conflict cost of pushing a unit through this edge.
    pub cost: i64,
    /// Index of the paired reverse edge in `to`'s list.
    pub rev: usize,
    /// False for the zero-capacity residual twin.
    pub forward: bool,
}

impl Edge {
    pub fn residual(&self) -> i64 {
        self.cap - self.flow
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowNetwork {
    pub roles: Vec<NodeRole>,
    pub adj: Vec<Vec<Edge>>,
}

/// A target and its visible sensors with per-sensor external-conflict cost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowTarget {
    pub id: VariableId,
    pub sensors: Vec<(u32, u32)>,
}

impl FlowTarget {
    pub fn uncosted(id: VariableId, sensors: &[u32]) -> FlowTarget {
        FlowTarget {
            id,
            sensors: sensors.iter().map(|&s| (s, 0)).collect(),
        }
    }

    pub fn demand(&self) -> usize {
        self.sensors.len().min(SENSORS_PER_TARGET)
    }
}

impl FlowNetwork {
    fn with_terminals() -> FlowNetwork {
        FlowNetwork {
            roles: vec![NodeRole::Source, NodeRole::Sink],
            adj: vec![Vec::new(), Vec::new()],
        }
    }

    fn add_node(&mut self, role: NodeRole) -> usize {
        self.roles.push(role);
        self.adj.push(Vec::new());
        self.roles.len() - 1
    }

    fn add_edge(&mut self, u: usize, v: usize, cap: i64, cost: i64) {
        let ru = self.adj[v].len();
        let rv = self.adj[u].len();
        self.adj[u].push(Edge {
            to: v,
            cap,
            flow: 0,
            cost,
            rev: ru,
            forward: true,
        });
        self.adj[v].push(Edge {
            to: u,
            cap: 0,
            flow: 0,
            cost: -cost,
            rev: rv,
            forward: false,
        });
    }

    pub fn node_count(&self) -> usize {
        self.roles.len()
    }

    pub fn forward_edges(&self) -> impl Iterator<Item = (usize, &Edge)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, es)| es.iter().filter(|e| e.forward).map(move |e| (u, e)))
    }

    /// Net flow out of the source.
    pub fn value(&self) -> i64 {
        self.adj[SOURCE]
            .iter()
            .filter(|e| e.forward)
            .map(|e| e.flow)
            .sum()
    }

    /// Skew symmetry, capacity bounds and conservation.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (u, es) in self.adj.iter().enumerate() {
            for e in es {
                let back = &self.adj[e.to][e.rev];
                if back.flow != -e.flow {
                    return Err(format!("skew symmetry broken on ({u},{})", e.to));
                }
                if e.forward && (e.flow < 0 || e.flow > e.cap) {
                    return Err(format!("capacity broken on ({u},{})", e.to));
                }
            }
            if u != SOURCE && u != SINK {
                let net: i64 = es.iter().map(|e| e.flow).sum();
                if net != 0 {
                    return Err(format!("conservation broken at {u}"));
                }
            }
        }
        Ok(())
    }

    fn sorted(mut self) -> FlowNetwork {
        // ascending head order; fix up reverse indices afterwards
        for es in &mut self.adj {
            es.sort_by_key(|e| (e.to, !e.forward));
        }
        let mut pos: BTreeMap<(usize, usize, bool), usize> = BTreeMap::new();
        for (u, es) in self.adj.iter().enumerate() {
            for (i, e) in es.iter().enumerate() {
                pos.insert((u, e.to, e.forward), i);
            }
        }
        for u in 0..self.adj.len() {
            for i in 0..self.adj[u].len() {
                let (to, fwd) = (self.adj[u][i].to, self.adj[u][i].forward);
                self.adj[u][i].rev = pos[&(to, u, !fwd)];
            }
        }
        self
    }
}

/// Builds the network by the three reduction rules. Sensors shared between
/// targets get a single node.
pub fn build_flow_network(targets: &[FlowTarget]) -> FlowNetwork {
    let mut net = FlowNetwork::with_terminals();
    let mut target_nodes = Vec::with_capacity(targets.len());
    for t in targets {
        let node = net.add_node(NodeRole::Target(t.id));
        net.add_edge(node, SINK, t.demand() as i64, 0);
        target_nodes.push(node);
    }
    let sensors: BTreeSet<u32> = targets
        .iter()
        .flat_map(|t| t.sensors.iter().map(|&(s, _)| s))
        .collect();
    let mut sensor_node = BTreeMap::new();
    for s in sensors {
        let node = net.add_node(NodeRole::Sensor(s));
        net.add_edge(SOURCE, node, 1, 0);
        sensor_node.insert(s, node);
    }
    for (t, &tn) in targets.iter().zip(&target_nodes) {
        for &(s, cost) in &t.sensors {
            net.add_edge(sensor_node[&s], tn, 1, cost as i64);
        }
    }
    net.sorted()
}

/// How augmenting paths are selected. The max-flow value does not depend on
/// the choice; only which sensors end up assigned does.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathStrategy {
    /// Cheapest residual path by external-conflict cost; ties go to the
    /// ascending-node depth-first walk over cost-tight edges.
    MinCost,
    /// Fewest edges, neighbors in ascending order.
    Bfs,
    /// Depth-first, neighbors in ascending order.
    Dfs,
}

/// Augments until no residual `s -> t` path remains. Returns the flow value.
pub fn ford_fulkerson(net: &mut FlowNetwork, strategy: PathStrategy, work: &mut u64) -> i64 {
    for es in &mut net.adj {
        for e in es.iter_mut() {
            e.flow = 0;
        }
    }
    loop {
        let path = match strategy {
            PathStrategy::MinCost => min_cost_path(net, work),
            PathStrategy::Bfs => bfs_path(net, work),
            PathStrategy::Dfs => dfs_path(net, work),
        };
        let Some(path) = path else { break };
        let bottleneck = path
            .iter()
            .map(|&(u, i)| net.adj[u][i].residual())
            .min()
            .unwrap_or(0);
        if bottleneck <= 0 {
            break;
        }
        for (u, i) in path {
            let (to, rev) = (net.adj[u][i].to, net.adj[u][i].rev);
            net.adj[u][i].flow += bottleneck;
            net.adj[to][rev].flow -= bottleneck;
        }
    }
    net.value()
}

type Path = Vec<(usize, usize)>;

fn bfs_path(net: &FlowNetwork, work: &mut u64) -> Option<Path> {
    let n = net.node_count();
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[SOURCE] = true;
    let mut queue = VecDeque::from([SOURCE]);
    while let Some(u) = queue.pop_front() {
        for (i, e) in net.adj[u].iter().enumerate() {
            *work += 1;
            if e.residual() > 0 && !seen[e.to] {
                seen[e.to] = true;
                prev[e.to] = Some((u, i));
                if e.to == SINK {
                    return Some(unwind(&prev));
                }
                queue.push_back(e.to);
            }
        }
    }
    None
}

fn dfs_path(net: &FlowNetwork, work: &mut u64) -> Option<Path> {
    let n = net.node_count();
    let mut seen = vec![false; n];
    let mut path = Vec::new();
    fn go(
        net: &FlowNetwork,
        u: usize,
        seen: &mut [bool],
        path: &mut Path,
        work: &mut u64,
        allowed: &dyn Fn(usize, &Edge) -> bool,
    ) -> bool {
        if u == SINK {
            return true;
        }
        seen[u] = true;
        for (i, e) in net.adj[u].iter().enumerate() {
            *work += 1;
            if e.residual() > 0 && !seen[e.to] && allowed(u, e) {
                path.push((u, i));
                if go(net, e.to, seen, path, work, allowed) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
    go(net, SOURCE, &mut seen, &mut path, work, &|_, _| true).then_some(path)
}

fn min_cost_path(net: &FlowNetwork, work: &mut u64) -> Option<Path> {
    // Bellman-Ford toward the sink over residual edges. Successive cheapest
    // augmentation never creates a negative residual cycle.
    let n = net.node_count();
    let inf = i64::MAX / 4;
    let mut to_sink = vec![inf; n];
    to_sink[SINK] = 0;
    for _ in 0..n {
        let mut changed = false;
        for u in 0..n {
            for e in &net.adj[u] {
                *work += 1;
                if e.residual() > 0 && to_sink[e.to] < inf {
                    let c = e.cost + to_sink[e.to];
                    if c < to_sink[u] {
                        to_sink[u] = c;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    if to_sink[SOURCE] >= inf {
        return None;
    }
    let mut seen = vec![false; n];
    let mut path = Vec::new();
    fn go(
        net: &FlowNetwork,
        u: usize,
        dist: &[i64],
        seen: &mut [bool],
        path: &mut Path,
        work: &mut u64,
    ) -> bool {
        if u == SINK {
            return true;
        }
        seen[u] = true;
        for (i, e) in net.adj[u].iter().enumerate() {
            *work += 1;
            if e.residual() > 0 && !seen[e.to] && e.cost + dist[e.to] == dist[u] {
                path.push((u, i));
                if go(net, e.to, dist, seen, path, work) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
    go(net, SOURCE, &to_sink, &mut seen, &mut path, work).then_some(path)
}

fn unwind(prev: &[Option<(usize, usize)>]) -> Path {
    let mut path = Vec::new();
    let mut v = SINK;
    while let Some((u, i)) = prev[v] {
        path.push((u, i));
        v = u;
    }
    path.reverse();
    path
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FlowOutcome {
    Solution(Assignment),
    Unsatisfiable,
}

/// Reads the allocation off a maximal flow: unsatisfiable if any target edge
/// keeps residual capacity, otherwise each target gets the sensors whose
/// `(S, T)` edge carries one unit.
pub fn extract_assignment(net: &FlowNetwork) -> FlowOutcome {
    let mut sets: BTreeMap<VariableId, Vec<u32>> = BTreeMap::new();
    for (u, role) in net.roles.iter().enumerate() {
        if let NodeRole::Target(id) = role {
            let to_sink = net.adj[u]
                .iter()
                .find(|e| e.forward && e.to == SINK)
                .expect("every target has a sink edge");
            if to_sink.residual() > 0 {
                return FlowOutcome::Unsatisfiable;
            }
            sets.entry(*id).or_default();
        }
    }
    for (u, e) in net.forward_edges() {
        if let (NodeRole::Sensor(s), NodeRole::Target(t)) = (net.roles[u], net.roles[e.to]) {
            if e.flow == 1 {
                sets.entry(t).or_default().push(s);
            }
        }
    }
    FlowOutcome::Solution(
        sets.into_iter()
            .map(|(t, s)| (t, Value::sensors(s)))
            .collect(),
    )
}

/// Mediator solver for sensor sessions: min-conflict augmenting paths over
/// the session's flow network.
#[derive(Clone, Copy, Debug)]
pub struct FlowSolver {
    pub strategy: PathStrategy,
}

impl Default for FlowSolver {
    fn default() -> Self {
        FlowSolver {
            strategy: PathStrategy::MinCost,
        }
    }
}

impl FlowSolver {
    /// Per-sensor edge costs for one session variable: an outside agent is
    /// charged to sensor `s` when every domain value containing `s`
    /// conflicts with it.
    fn targets(sp: &SubProblem) -> Vec<FlowTarget> {
        sp.variables
            .iter()
            .enumerate()
            .map(|(i, sv)| {
                let mut per_sensor: BTreeMap<u32, Option<BTreeSet<VariableId>>> = BTreeMap::new();
                for (j, v) in sv.domain.iter().enumerate() {
                    let Value::Sensors(ss) = v else { continue };
                    let names = sp.outside_conflicts(i, j);
                    for s in ss {
                        let slot = per_sensor.entry(*s).or_insert(None);
                        *slot = Some(match slot.take() {
                            None => names.clone(),
                            Some(prev) => prev.intersection(&names).copied().collect(),
                        });
                    }
                }
                FlowTarget {
                    id: sv.id,
                    sensors: per_sensor
                        .into_iter()
                        .map(|(s, names)| (s, names.map_or(0, |n| n.len() as u32)))
                        .collect(),
                }
            })
            .collect()
    }
}

impl CentralSolver for FlowSolver {
    fn solve(&self, sp: &SubProblem, work: &mut u64) -> SolveOutcome {
        let targets = FlowSolver::targets(sp);
        let mut net = build_flow_network(&targets);
        ford_fulkerson(&mut net, self.strategy, work);
        match extract_assignment(&net) {
            FlowOutcome::Unsatisfiable => SolveOutcome::NoSolution,
            FlowOutcome::Solution(assignment) => {
                let outside_cost = sp.outside_cost(&assignment).unwrap_or(u32::MAX);
                SolveOutcome::Solution {
                    assignment,
                    outside_cost,
                }
            }
        }
    }
}

/// Whole-instance feasibility via max flow; an independent verdict for
/// sensor instances too large for exhaustive search.
pub fn solve_sensor_instance(instance: &crate::csp::CspInstance) -> Option<FlowOutcome> {
    let visible = instance.visible_sensors()?;
    let targets: Vec<FlowTarget> = visible
        .iter()
        .enumerate()
        .map(|(i, v)| FlowTarget::uncosted(VariableId(i as u32), v))
        .collect();
    let mut net = build_flow_network(&targets);
    ford_fulkerson(&mut net, PathStrategy::Bfs, &mut 0);
    Some(extract_assignment(&net))
}
