use crate::algebra::{ProcessId, SetFamily};
use crate::sim::{Context, Machine, Message, Operation, Output, Value};

use super::{family_hit, kernel_hit};

/// Echo then ready broadcast, with kernel amplification of `READY`.
///
/// After every state change the rules run in a fixed order: echo quorum,
/// ready kernel, ready quorum.
pub struct ReliableBroadcast {
    sender: ProcessId,
    quorums: SetFamily,
    kernels: SetFamily,
    sentecho: bool,
    echos: Vec<Option<Value>>,
    sentready: bool,
    readys: Vec<Option<Value>>,
    delivered: bool,
}

impl ReliableBroadcast {
    pub fn new(sender: ProcessId, quorums: SetFamily, kernels: SetFamily) -> Self {
        let n = quorums.universe_size();
        ReliableBroadcast {
            sender,
            quorums,
            kernels,
            sentecho: false,
            echos: vec![None; n],
            sentready: false,
            readys: vec![None; n],
            delivered: false,
        }
    }

    fn evaluate(&mut self, ctx: &mut Context<'_>) {
        if !self.sentready {
            if let Some(m) = family_hit(&self.echos, &self.quorums) {
                self.sentready = true;
                ctx.send_all(Message::Ready { m });
            }
        }
        if !self.sentready {
            if let Some(m) = kernel_hit(&self.readys, &self.kernels) {
                self.sentready = true;
                ctx.send_all(Message::Ready { m });
            }
        }
        if !self.delivered {
            if let Some(m) = family_hit(&self.readys, &self.quorums) {
                self.delivered = true;
                ctx.output(Output::RDeliver(m));
            }
        }
    }
}

impl Machine for ReliableBroadcast {
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
                self.evaluate(ctx);
            }
            Message::Ready { m } if self.readys[from.0].is_none() => {
                self.readys[from.0] = Some(m.clone());
                self.evaluate(ctx);
            }
            _ => {}
        }
    }
}
