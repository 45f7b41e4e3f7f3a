//! Cycle-based simulation of message-passing agents.
//!
//! During cycle `t` every message sent in cycle `t - 1` is delivered, each
//! agent drains its whole inbox in agent-id order, and whatever it sends is
//! held back until cycle `t + 1`.

pub mod kernel;
pub mod message;

use crate::csp::{Assignment, Value, VariableId};

pub use kernel::{
    detect_quiescence, run_trial, CycleReport, Protocol, SimOptions, Simulation, SolverChoice,
    TraceLine, TrialResult, TrialVerdict, Violation, DEFAULT_CYCLE_LIMIT,
};
pub use message::{message_size, InitPayload, Message, Nogood, KIND_NAMES, MESSAGE_KINDS};

/// Things an agent reports to the simulator besides messages.
#[derive(Clone, Debug, PartialEq)]
pub enum AgentEvent {
    /// Global unsatisfiability detected; halts the trial.
    NoSolution,
    SessionOpened,
    /// A mediator concluded a session with a solution.
    SessionClosed {
        participants: Vec<VariableId>,
        solution: Assignment,
        /// The mediator's belief about each participant's value when it
        /// chose the solution.
        believed: Assignment,
    },
    /// `accept!` arrived while the lock was not held for that mediator.
    AcceptWithoutLock {
        mediator: VariableId,
    },
    /// A session reply arrived with no session open.
    StrayReply {
        from: VariableId,
    },
}

/// Per-step scratch space handed to an agent.
#[derive(Debug, Default)]
pub struct Outbox {
    pub sends: Vec<(VariableId, Message)>,
    pub events: Vec<AgentEvent>,
    /// Abstract work: messages handled, constraint checks, search nodes.
    pub work: u64,
}

impl Outbox {
    pub fn send(&mut self, to: VariableId, msg: Message) {
        self.sends.push((to, msg));
    }

    pub fn event(&mut self, e: AgentEvent) {
        self.events.push(e);
    }
}

/// A protocol state machine driven by the simulator.
pub trait Agent {
    fn id(&self) -> VariableId;
    fn value(&self) -> &Value;
    fn priority(&self) -> u32;
    fn start(&mut self, out: &mut Outbox);
    /// Handles one message, including any reaction it triggers.
    fn receive(&mut self, from: VariableId, msg: Message, out: &mut Outbox);
    /// Mid-mediation or holding a lock.
    fn is_busy(&self) -> bool;
    /// Other agents this one knows about.
    fn view_members(&self) -> Vec<VariableId>;
    /// The value this agent believes `x` holds.
    fn believed_value(&self, x: VariableId) -> Option<&Value>;
    /// Mediator currently holding this agent's lock.
    fn locked_by(&self) -> Option<VariableId> {
        None
    }
    /// Sessions this agent has mediated.
    fn sessions(&self) -> u64 {
        0
    }
}
