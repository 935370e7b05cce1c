//! Randomized campaigns: random faulty sets, roles, Byzantine scripts and
//! schedules, each run checked with the full invariant suite.
//!
//! Every run is generated from its own seed, derived from the campaign seed,
//! so any run can be replayed alone with [`fuzz_one`].

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{ProcessId, ProcessSet};
use crate::check::{check_trace, CheckReport, Finding};
use crate::config::TrustSpec;
use crate::error::Result;
use crate::sim::{
    run, Action, ByzantineScript, Emit, Invocation, Message, MessageKind, Operation, Protocol, ProtocolKind, Rule,
    Schedule, SimSetup, Target, TargetWord, Trace, Trigger, Value,
};

pub const FUZZ_MAX_STEPS: u64 = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FuzzConfig {
    pub protocol: ProtocolKind,
    pub runs: usize,
    pub seed: u64,
    /// Also draw faulty sets no process anticipated.
    pub adversarial: bool,
    pub max_steps: u64,
}

impl FuzzConfig {
    pub fn new(protocol: ProtocolKind, runs: usize, seed: u64) -> Self {
        FuzzConfig {
            protocol,
            runs,
            seed,
            adversarial: false,
            max_steps: FUZZ_MAX_STEPS,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FuzzRun {
    pub index: usize,
    pub seed: u64,
    pub faulty: ProcessSet,
    pub steps: u64,
    pub truncated: bool,
    pub violations: Vec<Finding>,
}

#[derive(Clone, Debug)]
pub struct FuzzSummary {
    pub runs: Vec<FuzzRun>,
}

impl FuzzSummary {
    pub fn failing(&self) -> impl Iterator<Item = &FuzzRun> {
        self.runs.iter().filter(|r| !r.violations.is_empty())
    }

    pub fn violation_count(&self) -> usize {
        self.runs.iter().map(|r| r.violations.len()).sum()
    }

    pub fn truncated_count(&self) -> usize {
        self.runs.iter().filter(|r| r.truncated).count()
    }
}

/// Per-run seeds of a campaign.
pub fn run_seeds(master: u64, runs: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..runs).map(|_| rng.gen()).collect()
}

/// Every set some process considers survivable: the union of all `F_i*`.
pub fn tolerated_sets(spec: &TrustSpec) -> Vec<ProcessSet> {
    let mut out = BTreeSet::new();
    for f in spec.fail_prone().families() {
        for &max in f {
            // Enumerate all submasks of `max`.
            let bits = max.bits();
            let mut sub = bits;
            loop {
                out.insert(sub);
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & bits;
            }
        }
    }
    out.into_iter().map(ProcessSet::from_bits).collect()
}

/// Builds the setup of one randomized run.
pub fn generate_case(spec: &TrustSpec, cfg: &FuzzConfig, run_seed: u64) -> SimSetup {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    let n = spec.n();
    let everyone: Vec<ProcessId> = spec.processes().collect();

    let tolerated = tolerated_sets(spec);
    let mut faulty = if cfg.adversarial && rng.gen_bool(0.5) {
        everyone.iter().copied().filter(|_| rng.gen_bool(0.35)).collect()
    } else {
        *tolerated.choose(&mut rng).expect("the empty set is always tolerated")
    };
    if faulty.len() == n {
        faulty.remove(*everyone.choose(&mut rng).expect("non-empty universe"));
    }
    let correct: Vec<ProcessId> = everyone.iter().copied().filter(|p| !faulty.contains(*p)).collect();

    let (x, u) = (Value::from("x"), Value::from("u"));
    let mut invocations = Vec::new();
    let protocol = match cfg.protocol {
        ProtocolKind::ConsistentBcast | ProtocolKind::ReliableBcast => {
            let sender = *everyone.choose(&mut rng).expect("non-empty universe");
            if !faulty.contains(sender) {
                invocations.push(Invocation {
                    id: "b1".into(),
                    process: sender,
                    op: Operation::Broadcast { value: x.clone() },
                    after: Vec::new(),
                });
            }
            if cfg.protocol == ProtocolKind::ConsistentBcast {
                Protocol::ConsistentBcast { sender }
            } else {
                Protocol::ReliableBcast { sender }
            }
        }
        ProtocolKind::AuthRegister | ProtocolKind::DwRegister => {
            let writer = *correct.choose(&mut rng).expect("some process is correct");
            let reader = *correct.choose(&mut rng).expect("some process is correct");
            let writes = rng.gen_range(1..=3);
            for k in 1..=writes {
                invocations.push(Invocation {
                    id: format!("w{k}"),
                    process: writer,
                    op: Operation::Write { value: Value(format!("v{k}")) },
                    after: Vec::new(),
                });
            }
            for k in 1..=rng.gen_range(1..=2) {
                let after = match rng.gen_range(0..=writes) {
                    0 => Vec::new(),
                    w => vec![format!("w{w}")],
                };
                invocations.push(Invocation { id: format!("r{k}"), process: reader, op: Operation::Read, after });
            }
            if cfg.protocol == ProtocolKind::AuthRegister {
                Protocol::AuthRegister { writer, reader }
            } else {
                Protocol::DwRegister { writer, reader }
            }
        }
    };

    let written: Vec<Value> = invocations
        .iter()
        .filter_map(|i| match &i.op {
            Operation::Write { value } => Some(value.clone()),
            _ => None,
        })
        .collect();
    let mut scripts = BTreeMap::new();
    for p in faulty.iter() {
        let script = match cfg.protocol {
            ProtocolKind::ConsistentBcast | ProtocolKind::ReliableBcast => {
                broadcast_script(&mut rng, &everyone, protocol.sender() == Some(p), cfg.protocol, [&x, &u])
            }
            _ => register_script(&mut rng, &everyone, &written, cfg.protocol == ProtocolKind::DwRegister),
        };
        scripts.insert(p, script);
    }

    SimSetup {
        protocol,
        faulty,
        scripts,
        invocations,
        schedule: Schedule::seeded(rng.gen()),
        max_steps: cfg.max_steps,
    }
}

/// Splits the universe into receivers of `a`, receivers of `b` and the rest.
fn equivocate(rng: &mut ChaCha8Rng, everyone: &[ProcessId], make: impl Fn(&Value) -> Message, a: &Value, b: &Value) -> Vec<Emit> {
    let (mut to_a, mut to_b) = (Vec::new(), Vec::new());
    for &p in everyone {
        match rng.gen_range(0..5) {
            0 | 1 => to_a.push(p),
            2 | 3 => to_b.push(p),
            _ => {}
        }
    }
    [(to_a, a), (to_b, b)]
        .into_iter()
        .filter(|(ps, _)| !ps.is_empty())
        .map(|(ps, v)| Emit { to: Target::List(ps), action: Action::Send(make(v)) })
        .collect()
}

fn broadcast_script(
    rng: &mut ChaCha8Rng,
    everyone: &[ProcessId],
    is_sender: bool,
    kind: ProtocolKind,
    [x, u]: [&Value; 2],
) -> ByzantineScript {
    let honest = rng.gen_bool(0.2);
    let mut rules = Vec::new();
    let (a, b) = if rng.gen_bool(0.5) { (x, u) } else { (u, x) };
    if is_sender {
        rules.push(Rule {
            on: Trigger::Start,
            once: true,
            emit: equivocate(rng, everyone, |v| Message::Send { m: v.clone() }, a, b),
        });
    }
    let reliable = kind == ProtocolKind::ReliableBcast;
    if rng.gen_bool(0.5) {
        rules.push(Rule {
            on: Trigger::Start,
            once: true,
            emit: equivocate(rng, everyone, |v| Message::Echo { m: v.clone() }, a, b),
        });
    }
    if reliable && rng.gen_bool(0.5) {
        rules.push(Rule {
            on: Trigger::Start,
            once: true,
            emit: equivocate(rng, everyone, |v| Message::Ready { m: v.clone() }, a, b),
        });
    }
    if rng.gen_bool(0.5) {
        rules.push(Rule {
            on: Trigger::Receive { kind: MessageKind::Send, from: None },
            once: true,
            emit: equivocate(rng, everyone, |v| Message::Echo { m: v.clone() }, b, a),
        });
    }
    if reliable && rng.gen_bool(0.5) {
        let trigger = if rng.gen_bool(0.5) { MessageKind::Echo } else { MessageKind::Ready };
        rules.push(Rule {
            on: Trigger::Receive { kind: trigger, from: None },
            once: true,
            emit: equivocate(rng, everyone, |v| Message::Ready { m: v.clone() }, b, a),
        });
    }
    ByzantineScript { honest, rules }
}

fn register_script(rng: &mut ChaCha8Rng, everyone: &[ProcessId], written: &[Value], double_write: bool) -> ByzantineScript {
    let honest = rng.gen_bool(0.2);
    let mut rules = Vec::new();
    let sender = || Target::Word(TargetWord::Sender);
    if rng.gen_bool(0.7) {
        rules.push(Rule {
            on: Trigger::Receive { kind: MessageKind::Write, from: None },
            once: false,
            emit: vec![Emit { to: sender(), action: Action::Ack {} }],
        });
    }
    if double_write && rng.gen_bool(0.7) {
        rules.push(Rule {
            on: Trigger::Receive { kind: MessageKind::Prewrite, from: None },
            once: false,
            emit: vec![Emit { to: sender(), action: Action::Ack {} }],
        });
    }
    let mut pool = vec![Value::initial(), Value::from("evil")];
    pool.extend(written.iter().cloned());
    let max_ts = written.len() as u64 + 1;
    for _ in 0..rng.gen_range(0..=2) {
        let ts = rng.gen_range(0..=max_ts);
        let value = pool.choose(rng).expect("non-empty pool").clone();
        let (pts, pv) = if double_write && rng.gen_bool(0.5) {
            (Some(ts + 1), Some(pool.choose(rng).expect("non-empty pool").clone()))
        } else {
            (None, None)
        };
        rules.push(Rule {
            on: Trigger::Receive { kind: MessageKind::Read, from: None },
            once: rng.gen_bool(0.3),
            emit: vec![Emit { to: sender(), action: Action::Value { ts, value, pts, pv } }],
        });
    }
    if rng.gen_bool(0.2) {
        // Unsolicited junk at everyone.
        let ts = rng.gen_range(0..=max_ts);
        rules.push(Rule {
            on: Trigger::Start,
            once: true,
            emit: vec![Emit {
                to: Target::List(everyone.to_vec()),
                action: Action::Send(Message::Ack { ts }),
            }],
        });
    }
    ByzantineScript { honest, rules }
}

/// Generates, runs and checks one case.
pub fn fuzz_one(spec: &TrustSpec, cfg: &FuzzConfig, run_seed: u64) -> Result<(SimSetup, Trace, CheckReport)> {
    let setup = generate_case(spec, cfg, run_seed);
    let trace = run(spec, setup.clone())?;
    let report = check_trace(spec, &setup, &trace);
    Ok((setup, trace, report))
}

/// Runs a campaign in parallel; results are in run order.
pub fn fuzz(spec: &TrustSpec, cfg: &FuzzConfig) -> Result<FuzzSummary> {
    let seeds = run_seeds(cfg.seed, cfg.runs);
    let runs = seeds
        .par_iter()
        .enumerate()
        .map(|(index, &seed)| {
            let (setup, trace, report) = fuzz_one(spec, cfg, seed)?;
            Ok(FuzzRun {
                index,
                seed,
                faulty: setup.faulty,
                steps: trace.steps,
                truncated: trace.truncated,
                violations: report.violations().cloned().collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FuzzSummary { runs })
}
