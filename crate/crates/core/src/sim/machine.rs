use serde::{Deserialize, Serialize};

use super::message::{Message, Value};
use crate::algebra::ProcessId;
use crate::signature::{Signature, SignatureRegistry};

/// An operation injected at a process by its local user.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Operation {
    Write { value: Value },
    Read,
    Broadcast { value: Value },
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Write { .. } => "write",
            Operation::Read => "read",
            Operation::Broadcast { .. } => "broadcast",
        }
    }
}

/// Something a machine reports to its local user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Output {
    WriteDone,
    ReadDone(Value),
    CDeliver(Value),
    RDeliver(Value),
}

/// Register variables tracked for monotonicity checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegisterState {
    pub ts: u64,
    pub pts: Option<u64>,
}

/// Capabilities handed to a machine for the duration of one event.
pub struct Context<'a> {
    me: ProcessId,
    n: usize,
    registry: &'a mut SignatureRegistry,
    pub(crate) sends: Vec<(ProcessId, Message)>,
    pub(crate) outputs: Vec<Output>,
}

impl<'a> Context<'a> {
    pub(crate) fn new(me: ProcessId, n: usize, registry: &'a mut SignatureRegistry) -> Self {
        Context {
            me,
            n,
            registry,
            sends: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn me(&self) -> ProcessId {
        self.me
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn send(&mut self, to: ProcessId, msg: Message) {
        self.sends.push((to, msg));
    }

    pub fn send_all(&mut self, msg: Message) {
        for j in 0..self.n {
            self.sends.push((ProcessId(j), msg.clone()));
        }
    }

    pub fn output(&mut self, out: Output) {
        self.outputs.push(out);
    }

    /// Signs under the calling process's own identity only.
    pub fn sign(&mut self, message: &[u8]) -> Signature {
        self.registry.sign(self.me, message)
    }

    pub fn verify(&self, signer: ProcessId, message: &[u8], sig: &Signature) -> bool {
        self.registry.verify(signer, message, sig)
    }
}

/// An event-driven process.
pub trait Machine: Send {
    /// Runs once before the first scheduled event.
    fn on_start(&mut self, _ctx: &mut Context<'_>) {}

    fn on_invoke(&mut self, op: &Operation, ctx: &mut Context<'_>);

    fn on_message(&mut self, from: ProcessId, msg: &Message, ctx: &mut Context<'_>);

    fn register_state(&self) -> Option<RegisterState> {
        None
    }
}
