use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::machine::{Context, Machine, Operation, Output, RegisterState};
use super::message::{Envelope, Value};
use super::script::{ByzantineScript, ScriptEnv, ScriptMachine};
use super::trace::{DeliveryEvent, Event, Record, Trace};
use crate::algebra::{core_sets, kernels, ProcessId, ProcessSet};
use crate::broadcast::{ConsistentBroadcast, ReliableBroadcast};
use crate::config::TrustSpec;
use crate::error::{Error, Result};
use crate::register::{AuthRegister, DoubleWriteRegister};
use crate::signature::{write_payload, SignatureRegistry};

pub const DEFAULT_MAX_STEPS: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    AuthRegister,
    DwRegister,
    ConsistentBcast,
    ReliableBcast,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 4] = [
        ProtocolKind::AuthRegister,
        ProtocolKind::DwRegister,
        ProtocolKind::ConsistentBcast,
        ProtocolKind::ReliableBcast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::AuthRegister => "auth-register",
            ProtocolKind::DwRegister => "dw-register",
            ProtocolKind::ConsistentBcast => "consistent-bcast",
            ProtocolKind::ReliableBcast => "reliable-bcast",
        }
    }

    pub fn is_register(self) -> bool {
        matches!(self, ProtocolKind::AuthRegister | ProtocolKind::DwRegister)
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown protocol `{s}`")))
    }
}

/// A protocol instance with its designated roles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    AuthRegister { writer: ProcessId, reader: ProcessId },
    DwRegister { writer: ProcessId, reader: ProcessId },
    ConsistentBcast { sender: ProcessId },
    ReliableBcast { sender: ProcessId },
}

impl Protocol {
    pub fn kind(&self) -> ProtocolKind {
        match self {
            Protocol::AuthRegister { .. } => ProtocolKind::AuthRegister,
            Protocol::DwRegister { .. } => ProtocolKind::DwRegister,
            Protocol::ConsistentBcast { .. } => ProtocolKind::ConsistentBcast,
            Protocol::ReliableBcast { .. } => ProtocolKind::ReliableBcast,
        }
    }

    pub fn writer(&self) -> Option<ProcessId> {
        match *self {
            Protocol::AuthRegister { writer, .. } | Protocol::DwRegister { writer, .. } => Some(writer),
            _ => None,
        }
    }

    pub fn reader(&self) -> Option<ProcessId> {
        match *self {
            Protocol::AuthRegister { reader, .. } | Protocol::DwRegister { reader, .. } => Some(reader),
            _ => None,
        }
    }

    pub fn sender(&self) -> Option<ProcessId> {
        match *self {
            Protocol::ConsistentBcast { sender } | Protocol::ReliableBcast { sender } => Some(sender),
            _ => None,
        }
    }

    fn roles(&self) -> ProcessSet {
        [self.writer(), self.reader(), self.sender()].into_iter().flatten().collect()
    }

    fn allows(&self, p: ProcessId, op: &Operation) -> bool {
        match op {
            Operation::Write { .. } => self.writer() == Some(p),
            Operation::Read => self.reader() == Some(p),
            Operation::Broadcast { .. } => self.sender() == Some(p),
        }
    }

    /// The correct machine for process `me`.
    pub fn machine(&self, me: ProcessId, spec: &TrustSpec) -> Result<Box<dyn Machine>> {
        let quorums = spec.quorums().get(me).clone();
        Ok(match *self {
            Protocol::AuthRegister { writer, reader } => Box::new(AuthRegister::new(me, writer, reader, quorums)),
            Protocol::DwRegister { writer, reader } => {
                let cores = core_sets(spec.fail_prone().get(me));
                Box::new(DoubleWriteRegister::new(me, writer, reader, quorums, cores))
            }
            Protocol::ConsistentBcast { sender } => Box::new(ConsistentBroadcast::new(sender, quorums)),
            Protocol::ReliableBcast { sender } => {
                let kernels = kernels(&quorums)?;
                Box::new(ReliableBroadcast::new(sender, quorums, kernels))
            }
        })
    }
}

/// An operation injected at a process, sequential per process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Invocation {
    pub id: String,
    pub process: ProcessId,
    pub op: Operation,
    /// Invocations that must have completed first.
    pub after: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleStep<P = ProcessId> {
    Deliver { from: P, to: P },
    Invoke(String),
}

/// Adversarial delivery order: scripted steps first, then seeded random choices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schedule {
    pub seed: u64,
    pub script: Vec<ScheduleStep>,
}

impl Schedule {
    pub fn seeded(seed: u64) -> Self {
        Schedule {
            seed,
            script: Vec::new(),
        }
    }
}

/// Everything needed to run one execution.
#[derive(Clone, Debug)]
pub struct SimSetup {
    pub protocol: Protocol,
    pub faulty: ProcessSet,
    pub scripts: BTreeMap<ProcessId, ByzantineScript>,
    pub invocations: Vec<Invocation>,
    pub schedule: Schedule,
    pub max_steps: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum InvState {
    Waiting,
    Active,
    Done,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Choice {
    Deliver(usize),
    Invoke(usize),
}

/// A single-threaded discrete-event simulator.
pub struct Simulation {
    n: usize,
    faulty: ProcessSet,
    machines: Vec<Box<dyn Machine>>,
    channels: Vec<VecDeque<Envelope>>,
    next_seq: Vec<u64>,
    registry: SignatureRegistry,
    invocations: Vec<Invocation>,
    inv_state: Vec<InvState>,
    inv_index: HashMap<String, usize>,
    last_state: Vec<Option<RegisterState>>,
    script: VecDeque<ScheduleStep>,
    rng: ChaCha8Rng,
    max_steps: u64,
    step: u64,
    started: bool,
    truncated: bool,
    trace: Trace,
}

impl Simulation {
    pub fn new(spec: &TrustSpec, setup: SimSetup) -> Result<Self> {
        let n = spec.n();
        let universe = ProcessSet::full(n);
        if !setup.faulty.is_subset(universe) {
            return Err(Error::Scenario("faulty set lies outside the universe".into()));
        }
        if !setup.protocol.roles().is_subset(universe) {
            return Err(Error::Scenario("protocol role outside the universe".into()));
        }
        let scripted: ProcessSet = setup.scripts.keys().copied().collect();
        if scripted != setup.faulty {
            return Err(Error::Scenario(format!(
                "scripts must be given exactly for the faulty processes {}, got {}",
                spec.format_set(setup.faulty),
                spec.format_set(scripted)
            )));
        }
        if let Some((p, _)) = setup.scripts.iter().find(|(_, s)| s.has_start_rule_to_sender()) {
            return Err(Error::Scenario(format!("start rule of {} targets `sender`", spec.name(*p))));
        }
        for s in setup.scripts.values() {
            for r in &s.rules {
                let bad = match &r.on {
                    super::script::Trigger::Receive { from: Some(f), .. } => f.0 >= n,
                    _ => false,
                } || r.emit.iter().any(|e| match &e.to {
                    super::script::Target::List(ps) => ps.iter().any(|p| p.0 >= n),
                    _ => false,
                });
                if bad {
                    return Err(Error::Scenario("script refers to a process outside the universe".into()));
                }
            }
        }

        let mut inv_index = HashMap::new();
        for (i, inv) in setup.invocations.iter().enumerate() {
            if inv.process.0 >= n {
                return Err(Error::Scenario(format!("invocation `{}` at unknown process", inv.id)));
            }
            if !setup.protocol.allows(inv.process, &inv.op) {
                return Err(Error::Scenario(format!(
                    "invocation `{}`: {} may not {} in this protocol",
                    inv.id,
                    spec.name(inv.process),
                    inv.op.name()
                )));
            }
            if let Some(dep) = inv.after.iter().find(|d| !inv_index.contains_key(d.as_str())) {
                return Err(Error::Scenario(format!(
                    "invocation `{}` waits for `{dep}`, which is not an earlier invocation",
                    inv.id
                )));
            }
            if inv_index.insert(inv.id.clone(), i).is_some() {
                return Err(Error::Scenario(format!("duplicate invocation id `{}`", inv.id)));
            }
        }

        let env = ScriptEnv {
            writer: setup.protocol.writer(),
            authenticated: setup.protocol.kind() == ProtocolKind::AuthRegister,
        };
        let mut machines: Vec<Box<dyn Machine>> = Vec::with_capacity(n);
        for i in 0..n {
            let p = ProcessId(i);
            let honest = setup.protocol.machine(p, spec)?;
            machines.push(match setup.scripts.get(&p) {
                Some(script) => Box::new(ScriptMachine::new(script.clone(), honest, env)),
                None => honest,
            });
        }

        let mut registry = SignatureRegistry::new();
        if let Some(w) = env.writer.filter(|_| env.authenticated) {
            // The imaginary initial write of x0.
            registry.sign(w, &write_payload(w, 0, Value::initial().as_str()));
        }
        let last_state = machines.iter().map(|m| m.register_state()).collect();
        Ok(Simulation {
            n,
            faulty: setup.faulty,
            machines,
            channels: vec![VecDeque::new(); n * n],
            next_seq: vec![0; n * n],
            registry,
            inv_state: vec![InvState::Waiting; setup.invocations.len()],
            invocations: setup.invocations,
            inv_index,
            last_state,
            script: setup.schedule.script.into(),
            rng: ChaCha8Rng::seed_from_u64(setup.schedule.seed),
            max_steps: setup.max_steps,
            step: 0,
            started: false,
            truncated: false,
            trace: Trace {
                names: spec.names().to_vec(),
                records: Vec::new(),
                truncated: false,
                steps: 0,
            },
        })
    }

    fn enabled(&self) -> Vec<Choice> {
        let mut out: Vec<Choice> = (0..self.channels.len())
            .filter(|&c| !self.channels[c].is_empty())
            .map(Choice::Deliver)
            .collect();
        out.extend((0..self.invocations.len()).filter(|&i| self.invocation_enabled(i)).map(Choice::Invoke));
        out
    }

    fn invocation_enabled(&self, i: usize) -> bool {
        let inv = &self.invocations[i];
        self.inv_state[i] == InvState::Waiting
            && self.invocations[..i]
                .iter()
                .zip(&self.inv_state)
                .all(|(other, st)| other.process != inv.process || *st == InvState::Done)
            && inv.after.iter().all(|d| self.inv_state[self.inv_index[d]] == InvState::Done)
    }

    fn start(&mut self) {
        self.started = true;
        for i in 0..self.n {
            let p = ProcessId(i);
            let mut ctx = Context::new(p, self.n, &mut self.registry);
            self.machines[i].on_start(&mut ctx);
            let (sends, outputs) = (ctx.sends, ctx.outputs);
            self.apply(p, sends, outputs);
        }
    }

    /// Executes one scheduled event. Returns `false` at quiescence or at the step bound.
    pub fn deliver_next(&mut self) -> Result<bool> {
        if !self.started {
            self.start();
        }
        let enabled = self.enabled();
        if enabled.is_empty() {
            return Ok(false);
        }
        if self.step >= self.max_steps {
            self.truncated = true;
            return Ok(false);
        }
        let choice = match self.script.pop_front() {
            Some(step) => self.scripted_choice(&step, &enabled)?,
            None => enabled[self.rng.gen_range(0..enabled.len())],
        };
        self.step += 1;
        match choice {
            Choice::Deliver(c) => {
                let env = self.channels[c].pop_front().expect("enabled channel is non-empty");
                self.trace.records.push(Record {
                    step: self.step,
                    event: Event::Deliver(env.clone()),
                });
                let to = env.to;
                let mut ctx = Context::new(to, self.n, &mut self.registry);
                self.machines[to.0].on_message(env.from, &env.msg, &mut ctx);
                let (sends, outputs) = (ctx.sends, ctx.outputs);
                self.apply(to, sends, outputs);
            }
            Choice::Invoke(i) => {
                let inv = self.invocations[i].clone();
                self.trace.records.push(Record {
                    step: self.step,
                    event: Event::Invoke {
                        process: inv.process,
                        id: inv.id.clone(),
                        op: inv.op.clone(),
                    },
                });
                self.inv_state[i] = match inv.op {
                    Operation::Broadcast { .. } => InvState::Done,
                    _ => InvState::Active,
                };
                let mut ctx = Context::new(inv.process, self.n, &mut self.registry);
                self.machines[inv.process.0].on_invoke(&inv.op, &mut ctx);
                let (sends, outputs) = (ctx.sends, ctx.outputs);
                self.apply(inv.process, sends, outputs);
            }
        }
        Ok(true)
    }

    fn scripted_choice(&self, step: &ScheduleStep, enabled: &[Choice]) -> Result<Choice> {
        let (choice, what) = match step {
            ScheduleStep::Deliver { from, to } => {
                if from.0 >= self.n || to.0 >= self.n {
                    return Err(Error::ScheduleStep {
                        step: self.step as usize + 1,
                        detail: "channel outside the universe".into(),
                    });
                }
                (
                    Choice::Deliver(from.0 * self.n + to.0),
                    format!("no message in transit from {} to {}", self.trace.name(*from), self.trace.name(*to)),
                )
            }
            ScheduleStep::Invoke(id) => match self.inv_index.get(id) {
                Some(&i) => (Choice::Invoke(i), format!("invocation `{id}` is not enabled")),
                None => {
                    return Err(Error::ScheduleStep {
                        step: self.step as usize + 1,
                        detail: format!("unknown invocation `{id}`"),
                    })
                }
            },
        };
        if enabled.contains(&choice) {
            Ok(choice)
        } else {
            Err(Error::ScheduleStep {
                step: self.step as usize + 1,
                detail: what,
            })
        }
    }

    fn apply(&mut self, p: ProcessId, sends: Vec<(ProcessId, super::message::Message)>, outputs: Vec<Output>) {
        for (to, msg) in sends {
            let c = p.0 * self.n + to.0;
            let env = Envelope {
                from: p,
                to,
                seq: self.next_seq[c],
                msg,
            };
            self.next_seq[c] += 1;
            self.trace.records.push(Record {
                step: self.step,
                event: Event::Send(env.clone()),
            });
            self.channels[c].push_back(env);
        }
        for out in outputs {
            match out {
                Output::WriteDone | Output::ReadDone(_) => {
                    let active = (0..self.invocations.len())
                        .find(|&i| self.inv_state[i] == InvState::Active && self.invocations[i].process == p);
                    if let Some(i) = active {
                        self.inv_state[i] = InvState::Done;
                        let inv = &self.invocations[i];
                        self.trace.records.push(Record {
                            step: self.step,
                            event: Event::Response {
                                process: p,
                                id: inv.id.clone(),
                                op: inv.op.name(),
                                value: match out {
                                    Output::ReadDone(v) => Some(v),
                                    _ => None,
                                },
                            },
                        });
                    }
                }
                Output::CDeliver(value) => self.trace.records.push(Record {
                    step: self.step,
                    event: Event::Output { process: p, event: DeliveryEvent::CDeliver, value },
                }),
                Output::RDeliver(value) => self.trace.records.push(Record {
                    step: self.step,
                    event: Event::Output { process: p, event: DeliveryEvent::RDeliver, value },
                }),
            }
        }
        if !self.faulty.contains(p) {
            let now = self.machines[p.0].register_state();
            if now != self.last_state[p.0] {
                self.last_state[p.0] = now;
                if let Some(st) = now {
                    self.trace.records.push(Record {
                        step: self.step,
                        event: Event::State { process: p, ts: st.ts, pts: st.pts },
                    });
                }
            }
        }
    }

    /// Runs to quiescence or to the step bound.
    pub fn run(mut self) -> Result<Trace> {
        while self.deliver_next()? {}
        Ok(self.finish())
    }

    pub fn finish(mut self) -> Trace {
        self.trace.truncated = self.truncated;
        self.trace.steps = self.step;
        self.trace.records.push(Record {
            step: self.step,
            event: Event::End { truncated: self.truncated },
        });
        self.trace
    }
}

/// Runs one execution to completion.
pub fn run(spec: &TrustSpec, setup: SimSetup) -> Result<Trace> {
    Simulation::new(spec, setup)?.run()
}
