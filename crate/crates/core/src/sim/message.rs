use std::collections::BTreeMap;

use crate::csp::{Value, VariableId};

/// Agent state advertised by `init`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InitPayload {
    pub from: VariableId,
    pub priority: u32,
    pub value: Value,
    pub want_mediate: bool,
    pub domain: Vec<Value>,
    /// The sender's constraint partners.
    pub constraints: Vec<VariableId>,
}

/// A set of (variable, value) pairs that cannot all hold in any solution.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Nogood(pub BTreeMap<VariableId, Value>);

impl Nogood {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn members(&self) -> impl Iterator<Item = VariableId> + '_ {
        self.0.keys().copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Init(InitPayload),
    Ok {
        from: VariableId,
        priority: u32,
        value: Value,
        want_mediate: bool,
    },
    EvaluateRequest {
        from: VariableId,
        priority: u32,
    },
    Wait {
        from: VariableId,
        priority: u32,
    },
    EvaluateReply {
        from: VariableId,
        priority: u32,
        labels: Vec<(Value, Vec<VariableId>)>,
    },
    Accept {
        value: Value,
        from: VariableId,
        priority: u32,
        from_value: Value,
        want_mediate: bool,
    },
    AwcOk {
        from: VariableId,
        value: Value,
        priority: u32,
    },
    AwcNogood {
        from: VariableId,
        nogood: Nogood,
    },
    AwcLink {
        from: VariableId,
        value: Value,
        priority: u32,
    },
}

/// Number of distinct message kinds, indexing [`Message::kind_index`].
pub const MESSAGE_KINDS: usize = 9;

pub const KIND_NAMES: [&str; MESSAGE_KINDS] = [
    "init",
    "ok?",
    "evaluate?",
    "wait!",
    "evaluate!",
    "accept!",
    "awc-ok?",
    "nogood",
    "link",
];

const TAG: usize = 1;
const ID: usize = 4;
const SCALAR: usize = 4;
const ELEMENT: usize = 4;
const CONSTRAINT_REF: usize = 8;

fn value_bytes(v: &Value) -> usize {
    ELEMENT * v.width()
}

impl Message {
    pub fn kind_index(&self) -> usize {
        match self {
            Message::Init(_) => 0,
            Message::Ok { .. } => 1,
            Message::EvaluateRequest { .. } => 2,
            Message::Wait { .. } => 3,
            Message::EvaluateReply { .. } => 4,
            Message::Accept { .. } => 5,
            Message::AwcOk { .. } => 6,
            Message::AwcNogood { .. } => 7,
            Message::AwcLink { .. } => 8,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        KIND_NAMES[self.kind_index()]
    }

    pub fn sender(&self) -> VariableId {
        match self {
            Message::Init(p) => p.from,
            Message::Ok { from, .. }
            | Message::EvaluateRequest { from, .. }
            | Message::Wait { from, .. }
            | Message::EvaluateReply { from, .. }
            | Message::Accept { from, .. }
            | Message::AwcOk { from, .. }
            | Message::AwcNogood { from, .. }
            | Message::AwcLink { from, .. } => *from,
        }
    }
}

/// Wire size under the accounting model: a 1-byte tag, 4 bytes per agent
/// id, 4 per priority or flag, 4 per value element (a sensor set counts
/// each sensor), 8 per constraint reference.
pub fn message_size(msg: &Message) -> usize {
    TAG + match msg {
        Message::Init(p) => {
            ID + SCALAR
                + value_bytes(&p.value)
                + SCALAR
                + p.domain.iter().map(value_bytes).sum::<usize>()
                + CONSTRAINT_REF * p.constraints.len()
        }
        Message::Ok { value, .. } => ID + SCALAR + value_bytes(value) + SCALAR,
        Message::EvaluateRequest { .. } | Message::Wait { .. } => ID + SCALAR,
        Message::EvaluateReply { labels, .. } => {
            ID + SCALAR
                + labels
                    .iter()
                    .map(|(v, names)| value_bytes(v) + ID * names.len())
                    .sum::<usize>()
        }
        Message::Accept {
            value, from_value, ..
        } => value_bytes(value) + ID + SCALAR + value_bytes(from_value) + SCALAR,
        Message::AwcOk { value, .. } | Message::AwcLink { value, .. } => {
            ID + value_bytes(value) + SCALAR
        }
        Message::AwcNogood { nogood, .. } => {
            ID + nogood
                .0
                .values()
                .map(|v| ID + value_bytes(v))
                .sum::<usize>()
        }
    }
}
