use crate::algebra::{ProcessId, ProcessSet, SetFamily};
use crate::signature::{write_payload, Signature};
use crate::sim::{Context, Machine, Message, Operation, Output, RegisterState, Value};

use super::highestval;

enum Pending {
    Write { ts: u64, acks: ProcessSet },
    Read { rid: u64, replies: Vec<Option<(u64, Value)>> },
}

/// Register emulation with writer-signed values.
///
/// Acknowledgements carry the timestamp they confirm so that an ack for an
/// earlier write never counts toward a later one.
pub struct AuthRegister {
    me: ProcessId,
    writer: ProcessId,
    reader: ProcessId,
    quorums: SetFamily,
    wts: u64,
    rid: u64,
    ts: u64,
    v: Value,
    sig: Signature,
    pending: Option<Pending>,
}

impl AuthRegister {
    pub fn new(me: ProcessId, writer: ProcessId, reader: ProcessId, quorums: SetFamily) -> Self {
        let v = Value::initial();
        let sig = Signature::compute(writer, &write_payload(writer, 0, v.as_str()));
        AuthRegister {
            me,
            writer,
            reader,
            quorums,
            wts: 0,
            rid: 0,
            ts: 0,
            v,
            sig,
            pending: None,
        }
    }
}

impl Machine for AuthRegister {
    fn on_invoke(&mut self, op: &Operation, ctx: &mut Context<'_>) {
        match op {
            Operation::Write { value } if self.me == self.writer => {
                self.wts += 1;
                let sig = ctx.sign(&write_payload(self.writer, self.wts, value.as_str()));
                ctx.send_all(Message::Write { ts: self.wts, value: value.clone(), sig: Some(sig) });
                self.pending = Some(Pending::Write { ts: self.wts, acks: ProcessSet::EMPTY });
            }
            Operation::Read if self.me == self.reader => {
                self.rid += 1;
                ctx.send_all(Message::Read { rid: self.rid });
                self.pending = Some(Pending::Read { rid: self.rid, replies: vec![None; ctx.n()] });
            }
            _ => {}
        }
    }

    fn on_message(&mut self, from: ProcessId, msg: &Message, ctx: &mut Context<'_>) {
        match msg {
            Message::Write { ts, value, sig: Some(sig) } if from == self.writer => {
                if !ctx.verify(self.writer, &write_payload(self.writer, *ts, value.as_str()), sig) {
                    return;
                }
                if *ts > self.ts {
                    self.ts = *ts;
                    self.v = value.clone();
                    self.sig = *sig;
                }
                ctx.send(from, Message::Ack { ts: *ts });
            }
            Message::Ack { ts } => {
                if let Some(Pending::Write { ts: want, acks }) = &mut self.pending {
                    if ts == want {
                        acks.insert(from);
                        if self.quorums.has_member_within(*acks) {
                            self.pending = None;
                            ctx.output(Output::WriteDone);
                        }
                    }
                }
            }
            Message::Read { rid } if from == self.reader => {
                ctx.send(
                    from,
                    Message::Value {
                        rid: *rid,
                        ts: self.ts,
                        value: self.v.clone(),
                        sig: Some(self.sig),
                        pts: None,
                        pv: None,
                    },
                );
            }
            Message::Value { rid, ts, value, sig: Some(sig), .. } => {
                let Some(Pending::Read { rid: want, replies }) = &mut self.pending else {
                    return;
                };
                if rid != want || !ctx.verify(self.writer, &write_payload(self.writer, *ts, value.as_str()), sig) {
                    return;
                }
                replies[from.0] = Some((*ts, value.clone()));
                let valid: ProcessSet = (0..replies.len())
                    .filter(|&j| replies[j].is_some())
                    .map(ProcessId)
                    .collect();
                if let Some(q) = self.quorums.member_within(valid) {
                    let result = highestval(q.iter().map(|j| {
                        let (ts, v) = replies[j.0].as_ref().expect("quorum members replied");
                        (*ts, v)
                    }))
                    .expect("quorums are non-empty");
                    self.pending = None;
                    ctx.output(Output::ReadDone(result));
                }
            }
            _ => {}
        }
    }

    fn register_state(&self) -> Option<RegisterState> {
        Some(RegisterState { ts: self.ts, pts: None })
    }
}
