use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use crate::apo::ApoAgent;
use crate::awc::AwcAgent;
use crate::csp::{compatible, verify_solution, Assignment, CspInstance, Kind, VariableId};
use crate::error::SimError;
use crate::generators::random_initial_values;
use crate::solvers::{BranchAndBound, CentralSolver, FlowSolver};

use super::message::{message_size, Message, MESSAGE_KINDS};
use super::{Agent, AgentEvent, Outbox};

/// The AWC cutoff used throughout the experiments.
pub const DEFAULT_CYCLE_LIMIT: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    Apo,
    Awc,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Apo => "apo",
            Protocol::Awc => "awc",
        }
    }

    pub fn parse(s: &str) -> Option<Protocol> {
        match s.to_ascii_lowercase().as_str() {
            "apo" => Some(Protocol::Apo),
            "awc" => Some(Protocol::Awc),
            _ => None,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Centralized solver used by APO mediators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolverChoice {
    /// Branch and bound for coloring, max-flow for sensor instances.
    #[default]
    Auto,
    BranchAndBound,
    Flow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TrialVerdict {
    Running,
    Solved,
    Unsatisfiable,
    CycleLimit,
}

impl TrialVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialVerdict::Running => "running",
            TrialVerdict::Solved => "solved",
            TrialVerdict::Unsatisfiable => "unsatisfiable",
            TrialVerdict::CycleLimit => "cycle-limit",
        }
    }

    pub fn parse(s: &str) -> Option<TrialVerdict> {
        match s {
            "running" => Some(TrialVerdict::Running),
            "solved" => Some(TrialVerdict::Solved),
            "unsatisfiable" => Some(TrialVerdict::Unsatisfiable),
            "cycle-limit" => Some(TrialVerdict::CycleLimit),
            _ => None,
        }
    }

    /// Solved or refuted before the cycle limit.
    pub fn terminated(self) -> bool {
        matches!(self, TrialVerdict::Solved | TrialVerdict::Unsatisfiable)
    }
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub cycle_limit: u64,
    pub trace: bool,
    pub assert_invariants: bool,
    /// Wall-clock timing per agent step. Off by default because it makes
    /// results depend on the host.
    pub measure_wall: bool,
    pub solver: SolverChoice,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            cycle_limit: DEFAULT_CYCLE_LIMIT,
            trace: false,
            assert_invariants: true,
            measure_wall: false,
            solver: SolverChoice::Auto,
        }
    }
}

/// `cycle sender receiver type size`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceLine {
    pub cycle: u64,
    pub sender: VariableId,
    pub receiver: VariableId,
    pub kind: &'static str,
    pub size: usize,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {}",
            self.cycle, self.sender.0, self.receiver.0, self.kind, self.size
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub cycle: u64,
    pub kind: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cycle {}: {}: {}", self.cycle, self.kind, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub protocol: Protocol,
    pub verdict: TrialVerdict,
    pub cycles: u64,
    pub messages: u64,
    pub messages_by_kind: [u64; MESSAGE_KINDS],
    pub bytes: u64,
    /// Serial work: abstract effort summed over cycles and agents.
    pub work: u64,
    /// Serial wall-clock time in nanoseconds (0 unless measured).
    pub wall_ns: u64,
    pub n: usize,
    /// Directed view links at the end of the trial.
    pub links_directed: u64,
    /// Largest `|view ∪ {self}|` over agents.
    pub max_view: u64,
    /// Mediation sessions run (APO).
    pub sessions: u64,
    /// Cycle in which a no-solution broadcast happened.
    pub no_solution_cycle: Option<u64>,
    pub final_assignment: Option<Assignment>,
    pub violations: Vec<Violation>,
    pub trace: Option<Vec<TraceLine>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleReport {
    pub cycle: u64,
    pub delivered: usize,
    pub sent: usize,
    pub quiescent: bool,
}

#[derive(Clone, Debug)]
struct Envelope {
    from: VariableId,
    to: VariableId,
    msg: Message,
    sent_cycle: u64,
    seq: u64,
}

pub struct Simulation<'a, A: Agent> {
    instance: &'a CspInstance,
    agents: Vec<A>,
    mailboxes: Vec<VecDeque<Envelope>>,
    in_flight: Vec<Envelope>,
    cycle: u64,
    verdict: TrialVerdict,
    options: SimOptions,
    check_view_lemmas: bool,
    next_seq: BTreeMap<(VariableId, VariableId), u64>,
    last_delivered: BTreeMap<(VariableId, VariableId), u64>,
    last_priority: Vec<u32>,
    messages: u64,
    by_kind: [u64; MESSAGE_KINDS],
    bytes: u64,
    work: u64,
    wall_ns: u64,
    no_solution_cycle: Option<u64>,
    violations: Vec<Violation>,
    trace: Vec<TraceLine>,
}

impl<'a, A: Agent> Simulation<'a, A> {
    pub fn new(instance: &'a CspInstance, agents: Vec<A>, options: SimOptions) -> Self {
        let n = agents.len();
        Simulation {
            instance,
            last_priority: agents.iter().map(|a| a.priority()).collect(),
            agents,
            mailboxes: vec![VecDeque::new(); n],
            in_flight: Vec::new(),
            cycle: 0,
            verdict: TrialVerdict::Running,
            options,
            check_view_lemmas: false,
            next_seq: BTreeMap::new(),
            last_delivered: BTreeMap::new(),
            messages: 0,
            by_kind: [0; MESSAGE_KINDS],
            bytes: 0,
            work: 0,
            wall_ns: 0,
            no_solution_cycle: None,
            violations: Vec::new(),
            trace: Vec::new(),
        }
    }

    /// Enables the link-symmetry and view-freshness checks at quiescence.
    pub fn with_view_lemmas(mut self) -> Self {
        self.check_view_lemmas = true;
        self
    }

    pub fn agents(&self) -> &[A] {
        &self.agents
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn verdict(&self) -> TrialVerdict {
        self.verdict
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn trace(&self) -> &[TraceLine] {
        &self.trace
    }

    pub fn assignment(&self) -> Assignment {
        self.agents
            .iter()
            .map(|a| (a.id(), a.value().clone()))
            .collect()
    }

    fn violation(&mut self, kind: &'static str, detail: String) {
        self.violations.push(Violation {
            cycle: self.cycle,
            kind,
            detail,
        });
    }

    /// One cycle: deliver, let every agent drain its inbox, collect sends.
    pub fn step_cycle(&mut self) -> CycleReport {
        assert_eq!(
            self.verdict,
            TrialVerdict::Running,
            "trial already finished"
        );
        self.cycle += 1;
        let delivered = self.in_flight.len();
        for env in std::mem::take(&mut self.in_flight) {
            let to = env.to.index();
            self.mailboxes[to].push_back(env);
        }
        let mut sent = 0;
        for i in 0..self.agents.len() {
            let mut out = Outbox::default();
            let started = self.options.measure_wall.then(Instant::now);
            if self.cycle == 1 {
                self.agents[i].start(&mut out);
            } else if !self.mailboxes[i].is_empty() {
                let inbox = std::mem::take(&mut self.mailboxes[i]);
                for env in inbox {
                    self.check_delivery(&env);
                    out.work += 1;
                    self.agents[i].receive(env.from, env.msg, &mut out);
                }
            }
            if let Some(t) = started {
                self.wall_ns += t.elapsed().as_nanos() as u64;
            }
            self.work += out.work;
            let from = self.agents[i].id();
            for (to, msg) in out.sends {
                self.post(from, to, msg);
                sent += 1;
            }
            let mut halt = false;
            for e in out.events {
                halt |= self.handle_event(from, e);
            }
            if halt {
                break;
            }
        }
        if self.options.assert_invariants {
            self.check_priorities();
        }
        CycleReport {
            cycle: self.cycle,
            delivered,
            sent,
            quiescent: self.no_solution_cycle.is_none() && detect_quiescence(self),
        }
    }

    fn post(&mut self, from: VariableId, to: VariableId, msg: Message) {
        let size = message_size(&msg);
        self.messages += 1;
        self.bytes += size as u64;
        self.by_kind[msg.kind_index()] += 1;
        if self.options.trace {
            self.trace.push(TraceLine {
                cycle: self.cycle,
                sender: from,
                receiver: to,
                kind: msg.kind_name(),
                size,
            });
        }
        let seq = self.next_seq.entry((from, to)).or_insert(0);
        *seq += 1;
        self.in_flight.push(Envelope {
            from,
            to,
            msg,
            sent_cycle: self.cycle,
            seq: *seq,
        });
    }

    fn check_delivery(&mut self, env: &Envelope) {
        if !self.options.assert_invariants {
            return;
        }
        if env.sent_cycle >= self.cycle {
            self.violation(
                "same-cycle-delivery",
                format!(
                    "{} -> {} sent in cycle {}",
                    env.from, env.to, env.sent_cycle
                ),
            );
        }
        let last = self.last_delivered.entry((env.from, env.to)).or_insert(0);
        if env.seq <= *last {
            let detail = format!("{} -> {} seq {} after {}", env.from, env.to, env.seq, *last);
            self.violation("fifo", detail);
        } else {
            *last = env.seq;
        }
    }

    /// Returns true when the trial must halt.
    fn handle_event(&mut self, from: VariableId, e: AgentEvent) -> bool {
        match e {
            AgentEvent::NoSolution => {
                self.no_solution_cycle.get_or_insert(self.cycle);
                true
            }
            AgentEvent::SessionOpened => false,
            AgentEvent::SessionClosed {
                participants,
                solution,
                believed,
            } => {
                if self.options.assert_invariants {
                    self.check_session(from, &participants, &solution, &believed);
                }
                false
            }
            AgentEvent::AcceptWithoutLock { mediator } => {
                if self.options.assert_invariants {
                    self.violation(
                        "accept-without-lock",
                        format!("{from} accepted from {mediator} without its lock"),
                    );
                }
                false
            }
            AgentEvent::StrayReply { from: replier } => {
                if self.options.assert_invariants {
                    self.violation("stray-reply", format!("{from} got a reply from {replier}"));
                }
                false
            }
        }
    }

    /// Post-session satisfaction: participants are locked by the mediator,
    /// still hold the values it believed, and the dictated solution meets
    /// every in-session constraint.
    fn check_session(
        &mut self,
        mediator: VariableId,
        participants: &[VariableId],
        solution: &Assignment,
        believed: &Assignment,
    ) {
        for &p in participants {
            if p == mediator {
                continue;
            }
            let agent = &self.agents[p.index()];
            let locked = agent.locked_by() == Some(mediator);
            let fresh = believed.get(&p) == Some(agent.value());
            if !locked {
                self.violation(
                    "session-lock",
                    format!("{p} not locked by mediator {mediator}"),
                );
            }
            if !fresh {
                self.violation(
                    "session-stale-value",
                    format!("{mediator} mediated {p} with a stale value"),
                );
            }
        }
        let rel = self.instance.relation();
        for c in self.instance.constraints() {
            if let (Some(a), Some(b)) = (solution.get(&c.a), solution.get(&c.b)) {
                if !compatible(rel, a, b) {
                    self.violation(
                        "session-unsatisfied",
                        format!("{mediator} left {} and {} in conflict", c.a, c.b),
                    );
                }
            }
        }
    }

    fn check_priorities(&mut self) {
        for i in 0..self.agents.len() {
            let p = self.agents[i].priority();
            if p < self.last_priority[i] {
                let detail = format!(
                    "{} dropped from {} to {}",
                    self.agents[i].id(),
                    self.last_priority[i],
                    p
                );
                self.violation("priority-decrease", detail);
            }
            self.last_priority[i] = p;
        }
    }

    /// Link symmetry and view freshness, meaningful once nothing is in flight.
    fn check_views(&mut self) {
        let mut found = Vec::new();
        for a in &self.agents {
            for x in a.view_members() {
                let other = &self.agents[x.index()];
                if !other.view_members().contains(&a.id()) {
                    found.push((
                        "link-asymmetry",
                        format!("{} knows {x} but not back", a.id()),
                    ));
                }
                if a.believed_value(x) != Some(other.value()) {
                    found.push((
                        "stale-view",
                        format!("{} holds a stale value for {x}", a.id()),
                    ));
                }
            }
        }
        for (k, d) in found {
            self.violation(k, d);
        }
    }

    fn conflicted(&self) -> bool {
        let rel = self.instance.relation();
        self.instance.constraints().iter().any(|c| {
            !compatible(
                rel,
                self.agents[c.a.index()].value(),
                self.agents[c.b.index()].value(),
            )
        })
    }

    /// Steps until solved, refuted, stalled or out of cycles.
    pub fn run(&mut self) -> TrialVerdict {
        while self.verdict == TrialVerdict::Running {
            let report = self.step_cycle();
            if self.no_solution_cycle.is_some() {
                self.verdict = TrialVerdict::Unsatisfiable;
            } else if report.quiescent {
                self.verdict = TrialVerdict::Solved;
                if self.options.assert_invariants {
                    if self.check_view_lemmas {
                        self.check_views();
                    }
                    let a = self.assignment();
                    if !verify_solution(self.instance, &a).unwrap_or(false) {
                        self.violation("unsound-solution", "final assignment fails".into());
                    }
                }
            } else if self.in_flight.is_empty() {
                // nothing left to deliver, yet conflicts or sessions remain
                if self.options.assert_invariants {
                    let detail = if self.conflicted() {
                        "stable with conflicts"
                    } else {
                        "stable with an open session"
                    };
                    self.violation("stable-unsolved", detail.into());
                }
                self.verdict = TrialVerdict::CycleLimit;
            } else if self.cycle >= self.options.cycle_limit {
                self.verdict = TrialVerdict::CycleLimit;
            }
        }
        self.verdict
    }

    pub fn result(&self, protocol: Protocol) -> TrialResult {
        let links: u64 = self
            .agents
            .iter()
            .map(|a| a.view_members().len() as u64)
            .sum();
        let max_view = self
            .agents
            .iter()
            .map(|a| {
                let members = a.view_members();
                members.len() as u64 + u64::from(!members.contains(&a.id()))
            })
            .max()
            .unwrap_or(0);
        TrialResult {
            protocol,
            verdict: self.verdict,
            cycles: self.cycle,
            messages: self.messages,
            messages_by_kind: self.by_kind,
            bytes: self.bytes,
            work: self.work,
            wall_ns: self.wall_ns,
            n: self.agents.len(),
            links_directed: links,
            max_view,
            sessions: self.agents.iter().map(|a| a.sessions()).sum(),
            no_solution_cycle: self.no_solution_cycle,
            final_assignment: (self.verdict == TrialVerdict::Solved).then(|| self.assignment()),
            violations: self.violations.clone(),
            trace: self.options.trace.then(|| self.trace.clone()),
        }
    }
}

/// No messages in flight, no agent mid-session, and no violated constraint.
pub fn detect_quiescence<A: Agent>(sim: &Simulation<'_, A>) -> bool {
    sim.in_flight.is_empty() && !sim.agents.iter().any(|a| a.is_busy()) && !sim.conflicted()
}

/// Runs one trial to completion. The result is a pure function of the
/// arguments (wall-clock timing aside, which is off by default).
pub fn run_trial(
    instance: &CspInstance,
    protocol: Protocol,
    initial_values: Option<&Assignment>,
    options: &SimOptions,
    seed: u64,
) -> Result<TrialResult, SimError> {
    let values = match initial_values {
        Some(v) => v.clone(),
        None => random_initial_values(instance, seed),
    };
    for x in instance.variables() {
        match values.get(&x) {
            Some(v) if instance.domain(x).contains(v) => {}
            _ => return Err(SimError::BadInitialValue(x)),
        }
    }
    match protocol {
        Protocol::Apo => {
            let solver: Arc<dyn CentralSolver> = match (options.solver, instance.kind()) {
                (SolverChoice::Auto, Kind::Coloring) | (SolverChoice::BranchAndBound, _) => {
                    Arc::new(BranchAndBound)
                }
                (SolverChoice::Auto, Kind::Sensor) | (SolverChoice::Flow, Kind::Sensor) => {
                    Arc::new(FlowSolver::default())
                }
                (SolverChoice::Flow, Kind::Coloring) => {
                    return Err(SimError::ProtocolMismatch {
                        protocol: "apo-flow",
                        kind: "coloring",
                    })
                }
            };
            let agents = instance
                .variables()
                .map(|x| ApoAgent::new(instance, x, values[&x].clone(), solver.clone()))
                .collect();
            let mut sim = Simulation::new(instance, agents, options.clone()).with_view_lemmas();
            sim.run();
            Ok(sim.result(protocol))
        }
        Protocol::Awc => {
            let agents = instance
                .variables()
                .map(|x| AwcAgent::new(instance, x, values[&x].clone()))
                .collect();
            let mut sim = Simulation::new(instance, agents, options.clone());
            sim.run();
            Ok(sim.result(protocol))
        }
    }
}
