//! Asynchronous weak-commitment search with resolvent-based nogood learning.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use crate::csp::{compatible, CspInstance, Relation, Value, VariableId};
use crate::sim::{Agent, AgentEvent, Message, Nogood, Outbox};

/// Ordering key: higher priority first, smaller id on ties.
pub type Rank = (u32, Reverse<VariableId>);

pub fn rank(priority: u32, x: VariableId) -> Rank {
    (priority, Reverse(x))
}

pub struct AwcAgent {
    id: VariableId,
    relation: Relation,
    domain: Vec<Value>,
    neighbors: Vec<VariableId>,
    value: Value,
    priority: u32,
    /// (value, priority) per agent index, for agents heard from.
    view: Vec<Option<(Value, u32)>>,
    links: BTreeSet<VariableId>,
    learned: Vec<Nogood>,
    known: BTreeSet<Nogood>,
    generated: BTreeSet<Nogood>,
}

/// Per-value violation counts over the whole nogood list.
struct Tally {
    higher: Vec<usize>,
    lower: Vec<usize>,
    /// Position of the first violated higher nogood per value: neighbors
    /// first, then learned nogoods.
    first_higher: Vec<Option<usize>>,
}

impl AwcAgent {
    pub fn new(instance: &CspInstance, id: VariableId, value: Value) -> AwcAgent {
        let neighbors = instance.neighbors(id).to_vec();
        AwcAgent {
            id,
            relation: instance.relation(),
            domain: instance.domain(id).to_vec(),
            links: neighbors.iter().copied().collect(),
            neighbors,
            value,
            priority: 0,
            view: vec![None; instance.num_variables()],
            learned: Vec::new(),
            known: BTreeSet::new(),
            generated: BTreeSet::new(),
        }
    }

    pub fn learned(&self) -> &[Nogood] {
        &self.learned
    }

    pub fn links(&self) -> &BTreeSet<VariableId> {
        &self.links
    }

    fn seen(&self, x: VariableId) -> Option<&(Value, u32)> {
        self.view.get(x.index()).and_then(Option::as_ref)
    }

    fn set_view(&mut self, x: VariableId, value: Value, priority: u32) {
        if let Some(slot) = self.view.get_mut(x.index()) {
            *slot = Some((value, priority));
        }
    }

    fn rank_of(&self, x: VariableId) -> Rank {
        if x == self.id {
            rank(self.priority, x)
        } else {
            rank(self.seen(x).map_or(0, |e| e.1), x)
        }
    }

    /// Lowest rank among the members other than this agent; `None` for a
    /// nogood that names only this agent.
    pub fn nogood_rank(&self, ng: &Nogood) -> Option<Rank> {
        ng.members()
            .filter(|&x| x != self.id)
            .map(|x| self.rank_of(x))
            .min()
    }

    /// Counts, for every own value, the violated higher and lower nogoods.
    fn tally(&self, work: &mut u64) -> Tally {
        let k = self.domain.len();
        let mut t = Tally {
            higher: vec![0; k],
            lower: vec![0; k],
            first_higher: vec![None; k],
        };
        let mine = rank(self.priority, self.id);
        let note = |t: &mut Tally, pos: usize, vi: usize, higher: bool| {
            if higher {
                t.higher[vi] += 1;
                t.first_higher[vi].get_or_insert(pos);
            } else {
                t.lower[vi] += 1;
            }
        };
        for (pos, &j) in self.neighbors.iter().enumerate() {
            let Some((vj, _)) = self.seen(j) else {
                continue;
            };
            let higher = self.rank_of(j) > mine;
            for (vi, v) in self.domain.iter().enumerate() {
                *work += 1;
                if !compatible(self.relation, v, vj) {
                    note(&mut t, pos, vi, higher);
                }
            }
        }
        let base = self.neighbors.len();
        for (li, ng) in self.learned.iter().enumerate() {
            *work += 1;
            let mut own = None;
            let mut others_hold = true;
            for (x, val) in &ng.0 {
                if *x == self.id {
                    own = Some(val);
                } else if self.seen(*x).map(|e| &e.0) != Some(val) {
                    others_hold = false;
                    break;
                }
            }
            if !others_hold {
                continue;
            }
            let higher = self.nogood_rank(ng).is_none_or(|r| r > mine);
            for (vi, v) in self.domain.iter().enumerate() {
                if own.is_none_or(|o| o == v) {
                    note(&mut t, base + li, vi, higher);
                }
            }
        }
        t
    }

    fn nogood_at(&self, pos: usize, v: &Value) -> Nogood {
        if let Some(&j) = self.neighbors.get(pos) {
            let mut m = BTreeMap::new();
            m.insert(self.id, v.clone());
            if let Some((vj, _)) = self.seen(j) {
                m.insert(j, vj.clone());
            }
            Nogood(m)
        } else {
            self.learned[pos - self.neighbors.len()].clone()
        }
    }

    fn send_ok(&self, out: &mut Outbox) {
        for &x in &self.links {
            out.send(
                x,
                Message::AwcOk {
                    from: self.id,
                    value: self.value.clone(),
                    priority: self.priority,
                },
            );
        }
    }

    /// The union of the first violated higher nogood for each value, minus
    /// this agent's own pair. `None` if some value has no such nogood.
    pub fn resolvent(&self) -> Option<Nogood> {
        let t = self.tally(&mut 0);
        self.resolvent_from(&t)
    }

    fn resolvent_from(&self, t: &Tally) -> Option<Nogood> {
        let mut pairs = BTreeMap::new();
        for (vi, v) in self.domain.iter().enumerate() {
            for (x, val) in self.nogood_at(t.first_higher[vi]?, v).0 {
                if x != self.id {
                    pairs.insert(x, val);
                }
            }
        }
        Some(Nogood(pairs))
    }

    fn check_agent_view(&mut self, out: &mut Outbox) {
        let t = self.tally(&mut out.work);
        let Some(current) = self.domain.iter().position(|v| *v == self.value) else {
            return;
        };
        if t.higher[current] == 0 {
            return;
        }
        let repair = (0..self.domain.len())
            .filter(|&i| t.higher[i] == 0)
            .min_by_key(|&i| (t.lower[i], i));
        if let Some(i) = repair {
            self.value = self.domain[i].clone();
            self.send_ok(out);
            return;
        }
        let ng = self.resolvent_from(&t).unwrap_or_default();
        if ng.is_empty() {
            out.event(AgentEvent::NoSolution);
            return;
        }
        if !self.generated.insert(ng.clone()) {
            return;
        }
        for x in ng.members() {
            out.send(
                x,
                Message::AwcNogood {
                    from: self.id,
                    nogood: ng.clone(),
                },
            );
        }
        let top = self.view.iter().flatten().map(|e| e.1).max().unwrap_or(0);
        self.priority = (self.priority + 1).max(top + 1);
        let t = self.tally(&mut out.work);
        if let Some(i) =
            (0..self.domain.len()).min_by_key(|&i| (t.higher[i] > 0, t.higher[i] + t.lower[i], i))
        {
            self.value = self.domain[i].clone();
        }
        self.send_ok(out);
    }

    fn handle_nogood(&mut self, ng: Nogood, out: &mut Outbox) {
        if !self.known.insert(ng.clone()) {
            return;
        }
        for x in ng.members() {
            if x != self.id && self.seen(x).is_none() && self.links.insert(x) {
                out.send(
                    x,
                    Message::AwcLink {
                        from: self.id,
                        value: self.value.clone(),
                        priority: self.priority,
                    },
                );
            }
        }
        self.learned.push(ng);
        self.check_agent_view(out);
    }
}

impl Agent for AwcAgent {
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
        self.send_ok(out);
    }

    fn receive(&mut self, _from: VariableId, msg: Message, out: &mut Outbox) {
        match msg {
            Message::AwcOk {
                from,
                value,
                priority,
            } => {
                self.set_view(from, value, priority);
                self.links.insert(from);
                self.check_agent_view(out);
            }
            Message::AwcLink {
                from,
                value,
                priority,
            } => {
                self.set_view(from, value, priority);
                self.links.insert(from);
                out.send(
                    from,
                    Message::AwcOk {
                        from: self.id,
                        value: self.value.clone(),
                        priority: self.priority,
                    },
                );
                self.check_agent_view(out);
            }
            Message::AwcNogood { nogood, .. } => self.handle_nogood(nogood, out),
            _ => {}
        }
    }

    fn is_busy(&self) -> bool {
        false
    }

    fn view_members(&self) -> Vec<VariableId> {
        self.links.iter().copied().collect()
    }

    fn believed_value(&self, x: VariableId) -> Option<&Value> {
        self.seen(x).map(|e| &e.0)
    }
}
