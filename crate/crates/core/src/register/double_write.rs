use crate::algebra::{ProcessId, ProcessSet, SetFamily};
use crate::sim::{Context, Machine, Message, Operation, Output, RegisterState, Value};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    Pre,
    Post,
}

#[derive(Clone, PartialEq, Eq)]
struct Reply {
    pts: u64,
    pv: Value,
    ts: u64,
    v: Value,
}

impl Reply {
    fn reports(&self, ts: u64, v: &Value) -> bool {
        (self.pts == ts && self.pv == *v) || (self.ts == ts && self.v == *v)
    }
}

enum Pending {
    Write { ts: u64, value: Value, phase: Phase, acks: ProcessSet },
    Read { rid: u64, readlist: Vec<Option<Reply>>, wave: ProcessSet },
}

/// Register emulation without signatures: pre-write then write, and reads
/// that need a core set vouching for a pair and a quorum not contradicting it.
///
/// The reader keeps the latest reply of each process across retry waves and
/// re-sends `READ` only after a quorum has answered the current wave.
pub struct DoubleWriteRegister {
    me: ProcessId,
    writer: ProcessId,
    reader: ProcessId,
    quorums: SetFamily,
    cores: SetFamily,
    wts: u64,
    rid: u64,
    pts: u64,
    pv: Value,
    ts: u64,
    v: Value,
    pending: Option<Pending>,
}

impl DoubleWriteRegister {
    pub fn new(me: ProcessId, writer: ProcessId, reader: ProcessId, quorums: SetFamily, cores: SetFamily) -> Self {
        DoubleWriteRegister {
            me,
            writer,
            reader,
            quorums,
            cores,
            wts: 0,
            rid: 0,
            pts: 0,
            pv: Value::initial(),
            ts: 0,
            v: Value::initial(),
            pending: None,
        }
    }

    /// The value to return, if the read condition holds for some pair.
    fn decide(&self, readlist: &[Option<Reply>]) -> Option<Value> {
        let mut candidates: Vec<(u64, &Value)> = readlist
            .iter()
            .flatten()
            .flat_map(|r| [(r.pts, &r.pv), (r.ts, &r.v)])
            .collect();
        candidates.sort_unstable_by(|a, b| b.cmp(a));
        candidates.dedup();
        candidates.into_iter().find_map(|(ts, v)| {
            let holders = |pred: &dyn Fn(&Reply) -> bool| -> ProcessSet {
                (0..readlist.len())
                    .filter(|&k| readlist[k].as_ref().is_some_and(pred))
                    .map(ProcessId)
                    .collect()
            };
            let vouching = holders(&|r| r.reports(ts, v));
            let consistent = holders(&|r| r.ts < ts || r.reports(ts, v));
            (self.cores.has_member_within(vouching) && self.quorums.has_member_within(consistent)).then(|| v.clone())
        })
    }
}

impl Machine for DoubleWriteRegister {
    fn on_invoke(&mut self, op: &Operation, ctx: &mut Context<'_>) {
        match op {
            Operation::Write { value } if self.me == self.writer => {
                self.wts += 1;
                ctx.send_all(Message::Prewrite { ts: self.wts, value: value.clone() });
                self.pending = Some(Pending::Write {
                    ts: self.wts,
                    value: value.clone(),
                    phase: Phase::Pre,
                    acks: ProcessSet::EMPTY,
                });
            }
            Operation::Read if self.me == self.reader => {
                self.rid += 1;
                ctx.send_all(Message::Read { rid: self.rid });
                self.pending = Some(Pending::Read {
                    rid: self.rid,
                    readlist: vec![None; ctx.n()],
                    wave: ProcessSet::EMPTY,
                });
            }
            _ => {}
        }
    }

    fn on_message(&mut self, from: ProcessId, msg: &Message, ctx: &mut Context<'_>) {
        match msg {
            Message::Prewrite { ts, value } if from == self.writer => {
                if *ts == self.pts + 1 && self.pts == self.ts {
                    self.pts = *ts;
                    self.pv = value.clone();
                    ctx.send(from, Message::Preack { ts: *ts });
                }
            }
            Message::Write { ts, value, sig: None } if from == self.writer => {
                if *ts == self.pts && *value == self.pv {
                    self.ts = *ts;
                    self.v = value.clone();
                    ctx.send(from, Message::Ack { ts: *ts });
                }
            }
            Message::Preack { ts } | Message::Ack { ts } => {
                let want_phase = if matches!(msg, Message::Preack { .. }) { Phase::Pre } else { Phase::Post };
                let Some(Pending::Write { ts: wts, value, phase, acks }) = &mut self.pending else {
                    return;
                };
                if ts != wts || *phase != want_phase {
                    return;
                }
                acks.insert(from);
                if !self.quorums.has_member_within(*acks) {
                    return;
                }
                match phase {
                    Phase::Pre => {
                        ctx.send_all(Message::Write { ts: *wts, value: value.clone(), sig: None });
                        *phase = Phase::Post;
                        *acks = ProcessSet::EMPTY;
                    }
                    Phase::Post => {
                        self.pending = None;
                        ctx.output(Output::WriteDone);
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
                        sig: None,
                        pts: Some(self.pts),
                        pv: Some(self.pv.clone()),
                    },
                );
            }
            Message::Value { rid, ts, value, sig: None, pts: Some(pts), pv: Some(pv) } => {
                let decision = {
                    let Some(Pending::Read { rid: want, readlist, wave }) = &mut self.pending else {
                        return;
                    };
                    let well_formed = *pts == ts + 1 || (pts == ts && pv == value);
                    if rid != want || !well_formed {
                        return;
                    }
                    readlist[from.0] = Some(Reply { pts: *pts, pv: pv.clone(), ts: *ts, v: value.clone() });
                    wave.insert(from);
                    let readlist = readlist.clone();
                    self.decide(&readlist)
                };
                match decision {
                    Some(v) => {
                        self.pending = None;
                        ctx.output(Output::ReadDone(v));
                    }
                    None => {
                        if let Some(Pending::Read { rid, wave, .. }) = &mut self.pending {
                            if self.quorums.has_member_within(*wave) {
                                *wave = ProcessSet::EMPTY;
                                ctx.send_all(Message::Read { rid: *rid });
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }

    fn register_state(&self) -> Option<RegisterState> {
        Some(RegisterState { ts: self.ts, pts: Some(self.pts) })
    }
}
