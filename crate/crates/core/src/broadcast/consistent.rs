use crate::algebra::{ProcessId, SetFamily};
use crate::sim::{Context, Machine, Message, Operation, Output, Value};

use super::family_hit;

/// Echo broadcast: deliver once a quorum of this process echoes the same message.
pub struct ConsistentBroadcast {
    sender: ProcessId,
    quorums: SetFamily,
    sentecho: bool,
    echos: Vec<Option<Value>>,
    delivered: bool,
}

impl ConsistentBroadcast {
    pub fn new(sender: ProcessId, quorums: SetFamily) -> Self {
        let n = quorums.universe_size();
        ConsistentBroadcast {
            sender,
            quorums,
            sentecho: false,
            echos: vec![None; n],
            delivered: false,
        }
    }
}

impl Machine for ConsistentBroadcast {
    fn on_invoke(&mut self, op: &Operation, ctx: &mut Context<'_>) {
        if let Operation::Broadcast { value } = op {
            if ctx.me() == self.sender {
                ctx.send_all(Message::Send { m: value.clone() });
            }
        }
    }

    fn on_message(&mut self, from: ProcessId, msg: &Message, ctx: &mut Context<'_>) {
        match msg {
            Message::Send { m } if from == self.sender && !self.sentecho => {
                self.sentecho = true;
                ctx.send_all(Message::Echo { m: m.clone() });
            }
            Message::Echo { m } if self.echos[from.0].is_none() => {
                self.echos[from.0] = Some(m.clone());
                if !self.delivered {
                    if let Some(m) = family_hit(&self.echos, &self.quorums) {
                        self.delivered = true;
                        ctx.output(Output::CDeliver(m));
                    }
                }
            }
            _ => {}
        }
    }
}
