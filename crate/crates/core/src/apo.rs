//! Asynchronous Partial Overlay agents.
//!
//! Each agent starts with a view of its direct neighbors and grows it as it
//! mediates. Conflicts are resolved locally when the agent can fix them by
//! changing its own value, and otherwise through a mediation session over
//! its `good_list`, solved centrally by a [`CentralSolver`].

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::csp::{compatible, Assignment, CspInstance, Relation, Value, VariableId};
use crate::sim::{Agent, AgentEvent, InitPayload, Message, Outbox};
use crate::solvers::{CentralSolver, SessionVar, SolveOutcome, SubProblem};

/// What an agent knows about another agent.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewEntry {
    pub priority: u32,
    pub value: Option<Value>,
    pub want_mediate: bool,
    /// Unknown until an `init` from that agent arrives.
    pub domain: Option<Vec<Value>>,
    pub constraints: Option<Vec<VariableId>>,
}

impl ViewEntry {
    fn unknown(priority: u32) -> ViewEntry {
        ViewEntry {
            priority,
            value: None,
            want_mediate: false,
            domain: None,
            constraints: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MediationSession {
    /// Replies still outstanding.
    pub counter: usize,
    /// Labeled domains from `evaluate!` replies, including the mediator's own.
    pub preferences: BTreeMap<VariableId, Vec<(Value, Vec<VariableId>)>>,
    /// Agents that answered `wait!`.
    pub dropped: BTreeSet<VariableId>,
}

pub struct ApoAgent {
    id: VariableId,
    relation: Relation,
    domain: Vec<Value>,
    neighbors: Vec<VariableId>,
    value: Value,
    priority: u32,
    want_mediate: bool,
    locked_by: Option<VariableId>,
    session: Option<MediationSession>,
    view: BTreeMap<VariableId, ViewEntry>,
    good_list: BTreeSet<VariableId>,
    init_list: BTreeSet<VariableId>,
    sessions: u64,
    solver: Arc<dyn CentralSolver>,
}

impl ApoAgent {
    pub fn new(
        instance: &CspInstance,
        id: VariableId,
        value: Value,
        solver: Arc<dyn CentralSolver>,
    ) -> ApoAgent {
        ApoAgent {
            id,
            relation: instance.relation(),
            domain: instance.domain(id).to_vec(),
            neighbors: instance.neighbors(id).to_vec(),
            value,
            priority: 0,
            want_mediate: true,
            locked_by: None,
            session: None,
            view: BTreeMap::new(),
            good_list: BTreeSet::new(),
            init_list: BTreeSet::new(),
            sessions: 0,
            solver,
        }
    }

    pub fn want_mediate(&self) -> bool {
        self.want_mediate
    }

    pub fn good_list(&self) -> &BTreeSet<VariableId> {
        &self.good_list
    }

    pub fn init_list(&self) -> &BTreeSet<VariableId> {
        &self.init_list
    }

    pub fn view(&self) -> &BTreeMap<VariableId, ViewEntry> {
        &self.view
    }

    pub fn session(&self) -> Option<&MediationSession> {
        self.session.as_ref()
    }

    fn mediate_flag(&self) -> bool {
        self.session.is_some() || self.locked_by.is_some()
    }

    /// `(priority, id)`: the larger id wins ties.
    fn rank_of(&self, x: VariableId) -> (u32, VariableId) {
        if x == self.id {
            (self.priority, self.id)
        } else {
            (self.view.get(&x).map_or(0, |e| e.priority), x)
        }
    }

    fn init_payload(&self) -> InitPayload {
        InitPayload {
            from: self.id,
            priority: self.priority,
            value: self.value.clone(),
            want_mediate: self.want_mediate,
            domain: self.domain.clone(),
            constraints: self.neighbors.clone(),
        }
    }

    fn ok_message(&self) -> Message {
        Message::Ok {
            from: self.id,
            priority: self.priority,
            value: self.value.clone(),
            want_mediate: self.want_mediate,
        }
    }

    fn broadcast_ok(&self, out: &mut Outbox) {
        for &x in self.view.keys() {
            out.send(x, self.ok_message());
        }
    }

    fn entry(&mut self, x: VariableId, priority: u32) -> &mut ViewEntry {
        let e = self
            .view
            .entry(x)
            .or_insert_with(|| ViewEntry::unknown(priority));
        e.priority = priority;
        e
    }

    fn view_values(&self) -> Assignment {
        self.view
            .iter()
            .filter_map(|(&x, e)| e.value.clone().map(|v| (x, v)))
            .collect()
    }

    fn known_constraints(&self, x: VariableId) -> &[VariableId] {
        if x == self.id {
            &self.neighbors
        } else {
            self.view
                .get(&x)
                .and_then(|e| e.constraints.as_deref())
                .unwrap_or(&[])
        }
    }

    fn known_adjacent(&self, a: VariableId, b: VariableId) -> bool {
        self.known_constraints(a).contains(&b) || self.known_constraints(b).contains(&a)
    }

    /// Neighbors in the view that `v` would conflict with.
    fn conflicts_with(&self, v: &Value, out: &mut Outbox) -> Vec<VariableId> {
        let mut found = Vec::new();
        for &y in &self.neighbors {
            if let Some(vy) = self.view.get(&y).and_then(|e| e.value.as_ref()) {
                out.work += 1;
                if !compatible(self.relation, v, vy) {
                    found.push(y);
                }
            }
        }
        found
    }

    fn labeled_domain(&self, out: &mut Outbox) -> Vec<(Value, Vec<VariableId>)> {
        self.domain
            .iter()
            .map(|d| (d.clone(), self.conflicts_with(d, out)))
            .collect()
    }

    /// Adds every view member that is now connected to the good list.
    fn grow_good_list(&mut self) {
        loop {
            let joinable: Vec<VariableId> = self
                .view
                .keys()
                .copied()
                .filter(|x| !self.good_list.contains(x))
                .filter(|&x| self.good_list.iter().any(|&g| self.known_adjacent(g, x)))
                .collect();
            if joinable.is_empty() {
                break;
            }
            self.good_list.extend(joinable);
        }
        self.priority = self.priority.max(self.good_list.len() as u32);
    }

    fn initialize(&mut self, out: &mut Outbox) {
        self.priority = self.neighbors.len() as u32 + 1;
        self.want_mediate = true;
        self.good_list.insert(self.id);
        for &x in &self.neighbors {
            out.send(x, Message::Init(self.init_payload()));
        }
        self.init_list = self.neighbors.iter().copied().collect();
        if self.init_list.is_empty() {
            self.check_agent_view(out);
        }
    }

    fn handle_init(&mut self, p: InitPayload, out: &mut Outbox) {
        let from = p.from;
        self.view.insert(
            from,
            ViewEntry {
                priority: p.priority,
                value: Some(p.value),
                want_mediate: p.want_mediate,
                domain: Some(p.domain),
                constraints: Some(p.constraints),
            },
        );
        if self.good_list.iter().any(|&g| self.known_adjacent(g, from)) {
            self.grow_good_list();
        }
        if self.init_list.remove(&from) {
            // reply to our own request
        } else {
            out.send(from, Message::Init(self.init_payload()));
        }
        self.check_agent_view(out);
    }

    fn check_agent_view(&mut self, out: &mut Outbox) {
        if !self.init_list.is_empty() || self.mediate_flag() {
            return;
        }
        let conflicts = self.conflicts_with(&self.value.clone(), out);
        let conflicted = !conflicts.is_empty();
        let me = self.rank_of(self.id);
        let higher_wants = self
            .view
            .iter()
            .any(|(&x, e)| e.want_mediate && (e.priority, x) > me);
        if conflicted && !higher_wants {
            let only_lower = conflicts.iter().all(|&y| self.rank_of(y) < me);
            let repair = if only_lower {
                self.domain
                    .clone()
                    .into_iter()
                    .find(|d| self.conflicts_with(d, out).is_empty())
            } else {
                None
            };
            match repair {
                Some(d) => {
                    self.value = d;
                    self.want_mediate = false;
                    self.broadcast_ok(out);
                }
                None => {
                    self.want_mediate = true;
                    self.mediate(out);
                }
            }
        } else if self.want_mediate != conflicted {
            self.want_mediate = conflicted;
            self.broadcast_ok(out);
        }
    }

    fn mediate(&mut self, out: &mut Outbox) {
        self.sessions += 1;
        out.event(AgentEvent::SessionOpened);
        let mut session = MediationSession::default();
        session
            .preferences
            .insert(self.id, self.labeled_domain(out));
        for &x in &self.good_list {
            if x != self.id {
                out.send(
                    x,
                    Message::EvaluateRequest {
                        from: self.id,
                        priority: self.priority,
                    },
                );
                session.counter += 1;
            }
        }
        let done = session.counter == 0;
        self.session = Some(session);
        if done {
            self.choose_solution(out);
        }
    }

    fn handle_evaluate_request(&mut self, from: VariableId, priority: u32, out: &mut Outbox) {
        self.entry(from, priority).want_mediate = true;
        let requester = (priority, from);
        let expecting_higher = self
            .view
            .iter()
            .any(|(&x, e)| e.want_mediate && (e.priority, x) > requester);
        if self.mediate_flag() || expecting_higher {
            out.send(
                from,
                Message::Wait {
                    from: self.id,
                    priority: self.priority,
                },
            );
        } else {
            self.locked_by = Some(from);
            let labels = self.labeled_domain(out);
            out.send(
                from,
                Message::EvaluateReply {
                    from: self.id,
                    priority: self.priority,
                    labels,
                },
            );
        }
    }

    fn handle_reply(
        &mut self,
        from: VariableId,
        priority: u32,
        labels: Option<Vec<(Value, Vec<VariableId>)>>,
        out: &mut Outbox,
    ) {
        self.entry(from, priority);
        let Some(session) = self.session.as_mut() else {
            out.event(AgentEvent::StrayReply { from });
            return;
        };
        match labels {
            Some(l) => {
                session.preferences.insert(from, l);
            }
            None => {
                session.dropped.insert(from);
            }
        }
        session.counter = session.counter.saturating_sub(1);
        if session.counter == 0 {
            self.choose_solution(out);
        }
    }

    /// The subproblem handed to the solver, plus the believed values of the
    /// participants.
    fn build_subproblem(&self, session: &MediationSession) -> (SubProblem, Assignment) {
        let mut believed = Assignment::new();
        let mut variables = Vec::new();
        for (&x, labels) in &session.preferences {
            let current = if x == self.id {
                Some(self.value.clone())
            } else {
                self.view.get(&x).and_then(|e| e.value.clone())
            };
            let current = current.unwrap_or_else(|| labels[0].0.clone());
            believed.insert(x, current.clone());
            variables.push(SessionVar::new(
                x,
                &current,
                labels
                    .iter()
                    .map(|(v, names)| (v.clone(), names.iter().copied().collect())),
            ));
        }
        let ids: Vec<VariableId> = session.preferences.keys().copied().collect();
        let mut constraints = Vec::new();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                if self.known_adjacent(a, b) {
                    constraints.push((a, b));
                }
            }
        }
        let fixed: BTreeMap<VariableId, Value> = self
            .view
            .iter()
            .filter(|(x, _)| !session.preferences.contains_key(x))
            .filter_map(|(&x, e)| e.value.clone().map(|v| (x, v)))
            .collect();
        let mut outside_constraints = Vec::new();
        for &a in &ids {
            for &k in fixed.keys() {
                if self.known_adjacent(a, k) {
                    outside_constraints.push((a, k));
                }
            }
        }
        let sp = SubProblem {
            relation: self.relation,
            variables,
            constraints,
            fixed,
            outside_constraints,
        };
        (sp, believed)
    }

    fn choose_solution(&mut self, out: &mut Outbox) {
        let Some(session) = self.session.take() else {
            return;
        };
        let (sp, believed) = self.build_subproblem(&session);
        let outcome = self.solver.solve(&sp, &mut out.work);
        let solution = match outcome {
            SolveOutcome::NoSolution => {
                out.event(AgentEvent::NoSolution);
                return;
            }
            SolveOutcome::Solution { assignment, .. } => assignment,
        };
        if let Some(v) = solution.get(&self.id) {
            self.value = v.clone();
        }
        let mut view = self.view_values();
        for (x, v) in &solution {
            if view.contains_key(x) {
                view.insert(*x, v.clone());
            }
        }
        let conflicted = self.neighbors.iter().any(|y| {
            out.work += 1;
            view.get(y)
                .is_some_and(|vy| !compatible(self.relation, &self.value, vy))
        });
        self.want_mediate = conflicted;
        let members: Vec<VariableId> = self.view.keys().copied().collect();
        for x in members {
            let chosen = session.preferences.get(&x).and_then(|labels| {
                let v = solution.get(&x)?;
                labels
                    .iter()
                    .find(|(d, _)| d == v)
                    .map(|(d, names)| (d.clone(), names.clone()))
            });
            match chosen {
                Some((d, harmed)) => {
                    for k in harmed {
                        if k != self.id && !self.view.contains_key(&k) && self.init_list.insert(k) {
                            out.send(k, Message::Init(self.init_payload()));
                        }
                    }
                    out.send(
                        x,
                        Message::Accept {
                            value: d.clone(),
                            from: self.id,
                            priority: self.priority,
                            from_value: self.value.clone(),
                            want_mediate: self.want_mediate,
                        },
                    );
                    if let Some(e) = self.view.get_mut(&x) {
                        e.value = Some(d);
                    }
                }
                None => out.send(x, self.ok_message()),
            }
        }
        out.event(AgentEvent::SessionClosed {
            participants: session.preferences.keys().copied().collect(),
            solution,
            believed,
        });
        self.check_agent_view(out);
    }

    fn handle_accept(
        &mut self,
        value: Value,
        from: VariableId,
        priority: u32,
        from_value: Value,
        want_mediate: bool,
        out: &mut Outbox,
    ) {
        if self.locked_by != Some(from) {
            out.event(AgentEvent::AcceptWithoutLock { mediator: from });
        }
        self.value = value;
        self.locked_by = None;
        self.broadcast_ok(out);
        let e = self.entry(from, priority);
        e.value = Some(from_value);
        e.want_mediate = want_mediate;
        self.check_agent_view(out);
    }

    fn handle_ok(
        &mut self,
        from: VariableId,
        priority: u32,
        value: Value,
        want_mediate: bool,
        out: &mut Outbox,
    ) {
        let e = self.entry(from, priority);
        e.value = Some(value);
        e.want_mediate = want_mediate;
        self.check_agent_view(out);
    }
}

impl Agent for ApoAgent {
    fn id(&self) -> VariableId {
        self.id
    }

    fn value(&self) -> &Value {
        &self.value
    }

    fn priority(&self) -> u32 {
        self.priority
    }

    fn start(&mut self, out: &mut Outbox) {
        self.initialize(out);
    }

    fn receive(&mut self, _from: VariableId, msg: Message, out: &mut Outbox) {
        match msg {
            Message::Init(p) => self.handle_init(p, out),
            Message::Ok {
                from,
                priority,
                value,
                want_mediate,
            } => self.handle_ok(from, priority, value, want_mediate, out),
            Message::EvaluateRequest { from, priority } => {
                self.handle_evaluate_request(from, priority, out)
            }
            Message::Wait { from, priority } => self.handle_reply(from, priority, None, out),
            Message::EvaluateReply {
                from,
                priority,
                labels,
            } => self.handle_reply(from, priority, Some(labels), out),
            Message::Accept {
                value,
                from,
                priority,
                from_value,
                want_mediate,
            } => self.handle_accept(value, from, priority, from_value, want_mediate, out),
            Message::AwcOk { .. } | Message::AwcNogood { .. } | Message::AwcLink { .. } => {}
        }
    }

    fn is_busy(&self) -> bool {
        self.mediate_flag()
    }

    fn view_members(&self) -> Vec<VariableId> {
        self.view.keys().copied().collect()
    }

    fn believed_value(&self, x: VariableId) -> Option<&Value> {
        self.view.get(&x).and_then(|e| e.value.as_ref())
    }

    fn locked_by(&self) -> Option<VariableId> {
        self.locked_by
    }

    fn sessions(&self) -> u64 {
        self.sessions
    }
}
