//! Declarative Byzantine behavior.
//!
//! A script is a list of rules `trigger → emissions`. Emissions may differ per
//! receiver, which is how equivocation is expressed. Scripts are generic over
//! the process reference so the same types parse names from JSON and then
//! resolve to indices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::machine::{Context, Machine, Operation};
use super::message::{Message, MessageKind, Value};
use crate::algebra::ProcessId;
use crate::error::Result;
use crate::signature::{write_payload, Signature};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ByzantineScript<P = ProcessId> {
    /// Also run the correct protocol alongside the rules.
    #[serde(default)]
    pub honest: bool,
    #[serde(default)]
    pub rules: Vec<Rule<P>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule<P = ProcessId> {
    pub on: Trigger<P>,
    #[serde(default)]
    pub once: bool,
    pub emit: Vec<Emit<P>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trigger<P = ProcessId> {
    Start,
    Receive {
        #[serde(rename = "type")]
        kind: MessageKind,
        #[serde(skip_serializing_if = "Option::is_none")]
        from: Option<P>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Emit<P = ProcessId> {
    pub to: Target<P>,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetWord {
    All,
    Sender,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target<P = ProcessId> {
    Word(TargetWord),
    List(Vec<P>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    /// A literal message.
    Send(Message),
    /// `ACK`/`PREACK` for the triggering `WRITE`/`PREWRITE`, without storing anything.
    Ack {},
    /// `VALUE` reply to the triggering `READ`, claiming the given register contents.
    ///
    /// Under the signed protocol the reply carries the writer's signature if
    /// this process has seen it, and an invalid one otherwise.
    Value {
        ts: u64,
        value: Value,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pts: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pv: Option<Value>,
    },
    /// A `WRITE` signed under this process's own identity.
    SignedWrite { ts: u64, value: Value },
}

impl<P> ByzantineScript<P> {
    pub fn silent() -> Self {
        ByzantineScript {
            honest: false,
            rules: Vec::new(),
        }
    }

    pub fn resolve<Q>(self, f: &mut impl FnMut(P) -> Result<Q>) -> Result<ByzantineScript<Q>> {
        let rules = self
            .rules
            .into_iter()
            .map(|r| {
                let on = match r.on {
                    Trigger::Start => Trigger::Start,
                    Trigger::Receive { kind, from } => Trigger::Receive {
                        kind,
                        from: from.map(&mut *f).transpose()?,
                    },
                };
                let emit = r
                    .emit
                    .into_iter()
                    .map(|e| {
                        let to = match e.to {
                            Target::Word(w) => Target::Word(w),
                            Target::List(ps) => Target::List(ps.into_iter().map(&mut *f).collect::<Result<_>>()?),
                        };
                        Ok(Emit { to, action: e.action })
                    })
                    .collect::<Result<_>>()?;
                Ok(Rule { on, once: r.once, emit })
            })
            .collect::<Result<_>>()?;
        Ok(ByzantineScript {
            honest: self.honest,
            rules,
        })
    }
}

impl ByzantineScript<ProcessId> {
    /// Whether a start rule targets the (nonexistent) sender.
    pub fn has_start_rule_to_sender(&self) -> bool {
        self.rules.iter().any(|r| {
            r.on == Trigger::Start && r.emit.iter().any(|e| e.to == Target::Word(TargetWord::Sender))
        })
    }
}

/// Facts about the running protocol a script needs to build replies.
#[derive(Clone, Copy, Debug)]
pub struct ScriptEnv {
    pub writer: Option<ProcessId>,
    pub authenticated: bool,
}

/// Runs a script for a faulty process.
pub struct ScriptMachine {
    script: ByzantineScript,
    fired: Vec<bool>,
    inner: Option<Box<dyn Machine>>,
    env: ScriptEnv,
    observed: BTreeMap<(u64, Value), Signature>,
}

impl ScriptMachine {
    /// `inner` runs only when the script is marked honest.
    pub fn new(script: ByzantineScript, inner: Box<dyn Machine>, env: ScriptEnv) -> Self {
        let fired = vec![false; script.rules.len()];
        let inner = script.honest.then_some(inner);
        ScriptMachine {
            script,
            fired,
            inner,
            env,
            observed: BTreeMap::new(),
        }
    }

    fn fire(&mut self, trigger: Option<(ProcessId, &Message)>, ctx: &mut Context<'_>) {
        for idx in 0..self.script.rules.len() {
            let rule = &self.script.rules[idx];
            let matches = match (&rule.on, trigger) {
                (Trigger::Start, None) => true,
                (Trigger::Receive { kind, from }, Some((sender, msg))) => {
                    *kind == msg.kind() && from.is_none_or(|f| f == sender)
                }
                _ => false,
            };
            if !matches || (rule.once && self.fired[idx]) {
                continue;
            }
            self.fired[idx] = true;
            let emits = self.script.rules[idx].emit.clone();
            for e in &emits {
                if let Some(msg) = self.build(&e.action, trigger, ctx) {
                    let targets: Vec<ProcessId> = match &e.to {
                        Target::Word(TargetWord::All) => (0..ctx.n()).map(ProcessId).collect(),
                        Target::Word(TargetWord::Sender) => trigger.map(|(s, _)| s).into_iter().collect(),
                        Target::List(ps) => ps.clone(),
                    };
                    for to in targets {
                        ctx.send(to, msg.clone());
                    }
                }
            }
        }
    }

    fn build(&self, action: &Action, trigger: Option<(ProcessId, &Message)>, ctx: &mut Context<'_>) -> Option<Message> {
        match action {
            Action::Send(m) => Some(m.clone()),
            Action::Ack {} => match trigger.map(|(_, m)| m) {
                Some(Message::Write { ts, .. }) => Some(Message::Ack { ts: *ts }),
                Some(Message::Prewrite { ts, .. }) => Some(Message::Preack { ts: *ts }),
                _ => None,
            },
            Action::Value { ts, value, pts, pv } => {
                let rid = match trigger.map(|(_, m)| m) {
                    Some(Message::Read { rid }) => *rid,
                    _ => return None,
                };
                if self.env.authenticated {
                    let writer = self.env.writer?;
                    let sig = self.observed.get(&(*ts, value.clone())).copied().unwrap_or_else(|| {
                        let payload = write_payload(writer, *ts, value.as_str());
                        if *ts == 0 && *value == Value::initial() {
                            // Every process starts out holding the writer's signature on x0.
                            Signature::compute(writer, &payload)
                        } else {
                            Signature::forged(writer)
                        }
                    });
                    Some(Message::Value { rid, ts: *ts, value: value.clone(), sig: Some(sig), pts: None, pv: None })
                } else {
                    Some(Message::Value {
                        rid,
                        ts: *ts,
                        value: value.clone(),
                        sig: None,
                        pts: Some(pts.unwrap_or(*ts)),
                        pv: Some(pv.clone().unwrap_or_else(|| value.clone())),
                    })
                }
            }
            Action::SignedWrite { ts, value } => {
                let sig = ctx.sign(&write_payload(ctx.me(), *ts, value.as_str()));
                Some(Message::Write { ts: *ts, value: value.clone(), sig: Some(sig) })
            }
        }
    }
}

impl Machine for ScriptMachine {
    fn on_start(&mut self, ctx: &mut Context<'_>) {
        if let Some(inner) = &mut self.inner {
            inner.on_start(ctx);
        }
        self.fire(None, ctx);
    }

    fn on_invoke(&mut self, op: &Operation, ctx: &mut Context<'_>) {
        if let Some(inner) = &mut self.inner {
            inner.on_invoke(op, ctx);
        }
    }

    fn on_message(&mut self, from: ProcessId, msg: &Message, ctx: &mut Context<'_>) {
        if let (Some(writer), Message::Write { ts, value, sig: Some(sig) } | Message::Value { ts, value, sig: Some(sig), .. }) =
            (self.env.writer, msg)
        {
            if ctx.verify(writer, &write_payload(writer, *ts, value.as_str()), sig) {
                self.observed.insert((*ts, value.clone()), *sig);
            }
        }
        if let Some(inner) = &mut self.inner {
            inner.on_message(from, msg, ctx);
        }
        self.fire(Some((from, msg)), ctx);
    }
}
