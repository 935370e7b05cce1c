//! Trace invariants.
//!
//! Properties are scoped the way the protocol guarantees are: broadcast
//! agreement to wise processes, totality to the maximal guild, register
//! safety to executions with a wise writer and a wise reader. Failures of an
//! unscoped property are reported as observations rather than violations.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::algebra::{classify, maximal_guild, Classification, ProcessId, ProcessSet};
use crate::config::TrustSpec;
use crate::sim::{Event, Message, Operation, ProtocolKind, SimSetup, Trace, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Violation,
    Observation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub check: &'static str,
    pub severity: Severity,
    pub detail: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Violation => "VIOLATION",
            Severity::Observation => "observed",
        };
        write!(f, "{tag} [{}] {}", self.check, self.detail)
    }
}

/// Outcome of checking one trace.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    /// Names of the invariants that were evaluated.
    pub checked: Vec<&'static str>,
    pub findings: Vec<Finding>,
}

impl CheckReport {
    pub fn violations(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Violation)
    }

    pub fn is_clean(&self) -> bool {
        self.violations().next().is_none()
    }

    /// Whether `check` raised anything, at any severity.
    pub fn flagged(&self, check: &str) -> bool {
        self.findings.iter().any(|f| f.check == check)
    }

    fn evaluated(&mut self, check: &'static str) {
        if !self.checked.contains(&check) {
            self.checked.push(check);
        }
    }

    fn violation(&mut self, check: &'static str, detail: String) {
        self.findings.push(Finding { check, severity: Severity::Violation, detail });
    }

    fn observation(&mut self, check: &'static str, detail: String) {
        self.findings.push(Finding { check, severity: Severity::Observation, detail });
    }
}

/// Per-execution facts shared by the checks.
pub struct Execution<'a> {
    pub spec: &'a TrustSpec,
    pub setup: &'a SimSetup,
    pub trace: &'a Trace,
    pub classification: Classification,
    pub guild: Option<ProcessSet>,
}

impl<'a> Execution<'a> {
    pub fn new(spec: &'a TrustSpec, setup: &'a SimSetup, trace: &'a Trace) -> Self {
        Execution {
            spec,
            setup,
            trace,
            classification: classify(spec.fail_prone(), setup.faulty),
            guild: maximal_guild(spec.quorums(), spec.fail_prone(), setup.faulty),
        }
    }

    fn name(&self, p: ProcessId) -> &str {
        self.spec.name(p)
    }
}

/// Runs every invariant applicable to the protocol.
pub fn check_trace(spec: &TrustSpec, setup: &SimSetup, trace: &Trace) -> CheckReport {
    let ex = Execution::new(spec, setup, trace);
    let mut report = CheckReport::default();
    check_well_formed(&ex, &mut report);
    check_fairness(&ex, &mut report);
    match setup.protocol.kind() {
        ProtocolKind::ConsistentBcast | ProtocolKind::ReliableBcast => check_broadcast(&ex, &mut report),
        ProtocolKind::AuthRegister | ProtocolKind::DwRegister => check_register(&ex, &mut report),
    }
    report
}

/// FIFO, no duplication, no spoofing, and every delivery preceded by its send.
pub fn check_well_formed(ex: &Execution<'_>, report: &mut CheckReport) {
    report.evaluated("well-formed");
    let mut sent: HashMap<(ProcessId, ProcessId, u64), (u64, &Message)> = HashMap::new();
    let mut next_send: HashMap<(ProcessId, ProcessId), u64> = HashMap::new();
    let mut next_deliver: HashMap<(ProcessId, ProcessId), u64> = HashMap::new();
    for r in &ex.trace.records {
        match &r.event {
            Event::Send(e) => {
                let expect = next_send.entry((e.from, e.to)).or_insert(0);
                if e.seq != *expect {
                    report.violation(
                        "well-formed",
                        format!("send {}→{} has sequence {} where {} was due", ex.name(e.from), ex.name(e.to), e.seq, expect),
                    );
                }
                *expect = e.seq + 1;
                sent.insert((e.from, e.to, e.seq), (r.step, &e.msg));
            }
            Event::Deliver(e) => {
                let channel = format!("{}→{}", ex.name(e.from), ex.name(e.to));
                match sent.get(&(e.from, e.to, e.seq)) {
                    None => report.violation(
                        "well-formed",
                        format!("step {}: delivery {channel} #{} was never sent", r.step, e.seq),
                    ),
                    Some((step, _)) if *step >= r.step => report.violation(
                        "well-formed",
                        format!("step {}: delivery {channel} #{} precedes its send", r.step, e.seq),
                    ),
                    Some((_, msg)) if **msg != e.msg => report.violation(
                        "well-formed",
                        format!("step {}: delivery {channel} #{} differs from what was sent", r.step, e.seq),
                    ),
                    Some(_) => {}
                }
                let expect = next_deliver.entry((e.from, e.to)).or_insert(0);
                if e.seq != *expect {
                    let what = if e.seq < *expect { "duplicated" } else { "out of order" };
                    report.violation("well-formed", format!("step {}: delivery {channel} #{} is {what}", r.step, e.seq));
                }
                *expect = (*expect).max(e.seq + 1);
            }
            _ => {}
        }
    }
}

/// At quiescence every message between correct processes has been delivered.
pub fn check_fairness(ex: &Execution<'_>, report: &mut CheckReport) {
    if ex.trace.truncated {
        return;
    }
    report.evaluated("fairness");
    let faulty = ex.setup.faulty;
    let mut sends: HashMap<(ProcessId, ProcessId), u64> = HashMap::new();
    let mut delivers: HashMap<(ProcessId, ProcessId), u64> = HashMap::new();
    for r in &ex.trace.records {
        match &r.event {
            Event::Send(e) if !faulty.contains(e.from) && !faulty.contains(e.to) => {
                *sends.entry((e.from, e.to)).or_default() += 1
            }
            Event::Deliver(e) if !faulty.contains(e.from) && !faulty.contains(e.to) => {
                *delivers.entry((e.from, e.to)).or_default() += 1
            }
            _ => {}
        }
    }
    let mut channels: Vec<_> = sends.into_iter().collect();
    channels.sort();
    for ((from, to), count) in channels {
        let got = delivers.get(&(from, to)).copied().unwrap_or(0);
        if got < count {
            report.violation(
                "fairness",
                format!("{} of {count} messages {}→{} undelivered at quiescence", count - got, ex.name(from), ex.name(to)),
            );
        }
    }
}

fn format_deliveries(ex: &Execution<'_>, set: &[(ProcessId, &Value)]) -> String {
    let parts: Vec<String> = set.iter().map(|(p, v)| format!("{}:{v}", ex.name(*p))).collect();
    parts.join(", ")
}

/// Consistency, integrity, validity, totality and uniform `READY` payloads.
pub fn check_broadcast(ex: &Execution<'_>, report: &mut CheckReport) {
    let reliable = ex.setup.protocol.kind() == ProtocolKind::ReliableBcast;
    let sender = ex.setup.protocol.sender().expect("broadcast has a sender");
    let sender_correct = !ex.setup.faulty.contains(sender);
    let c = &ex.classification;
    let n = ex.spec.n();

    let mut delivered: Vec<Vec<&Value>> = vec![Vec::new(); n];
    let mut readys: Vec<(ProcessId, &Value)> = Vec::new();
    let mut broadcast: Vec<&Value> = Vec::new();
    for r in &ex.trace.records {
        match &r.event {
            Event::Output { process, value, .. } => delivered[process.0].push(value),
            Event::Send(e) => {
                if let Message::Ready { m } = &e.msg {
                    if !readys.iter().any(|(p, _)| *p == e.from) {
                        readys.push((e.from, m));
                    }
                }
            }
            Event::Invoke { op: Operation::Broadcast { value }, .. } => broadcast.push(value),
            _ => {}
        }
    }

    report.evaluated("integrity");
    for p in (0..n).map(ProcessId).filter(|p| c.is_correct(*p)) {
        if delivered[p.0].len() > 1 {
            report.violation("integrity", format!("{} delivered {} times", ex.name(p), delivered[p.0].len()));
        }
        if sender_correct && c.is_wise(p) {
            for v in &delivered[p.0] {
                if !broadcast.contains(v) {
                    report.violation(
                        "integrity",
                        format!("{} delivered {v}, which the correct sender did not broadcast", ex.name(p)),
                    );
                }
            }
        }
    }

    report.evaluated("consistency");
    let wise_first: Vec<(ProcessId, &Value)> = (0..n)
        .map(ProcessId)
        .filter(|p| c.is_wise(*p))
        .filter_map(|p| delivered[p.0].first().map(|v| (p, *v)))
        .collect();
    if wise_first.windows(2).any(|w| w[0].1 != w[1].1) {
        report.violation(
            "consistency",
            format!("wise processes delivered different messages: {}", format_deliveries(ex, &wise_first)),
        );
    }

    let quiescent = !ex.trace.truncated;
    let invoked = sender_correct && !broadcast.is_empty();
    if !reliable {
        if quiescent && invoked {
            report.evaluated("validity");
            for p in c.wise().iter().filter(|p| delivered[p.0].is_empty()) {
                report.violation(
                    "validity",
                    format!("correct sender {} broadcast but wise {} never delivered", ex.name(sender), ex.name(p)),
                );
            }
        }
        return;
    }

    let Some(guild) = ex.guild else {
        for (p, v) in &wise_first {
            report.observation("outside-guild", format!("wise {} delivered {v} in an execution without a guild", ex.name(*p)));
        }
        return;
    };
    report.evaluated("ready-uniformity");
    let wise_readys: Vec<(ProcessId, &Value)> = readys.iter().copied().filter(|(p, _)| c.is_wise(*p)).collect();
    if wise_readys.windows(2).any(|w| w[0].1 != w[1].1) {
        report.violation(
            "ready-uniformity",
            format!("wise processes sent different READY messages: {}", format_deliveries(ex, &wise_readys)),
        );
    }
    if quiescent {
        if invoked {
            report.evaluated("validity");
            for p in guild.iter().filter(|p| delivered[p.0].is_empty()) {
                report.violation(
                    "validity",
                    format!("correct sender {} broadcast but guild member {} never delivered", ex.name(sender), ex.name(p)),
                );
            }
        }
        report.evaluated("totality");
        if let Some((first, v)) = wise_first.first() {
            for p in guild.iter().filter(|p| delivered[p.0].is_empty()) {
                report.violation(
                    "totality",
                    format!("wise {} delivered {v} but guild member {} never delivered", ex.name(*first), ex.name(p)),
                );
            }
        }
    }
    for (p, v) in wise_first.iter().filter(|(p, _)| !guild.contains(*p)) {
        report.observation("outside-guild", format!("wise {} outside the maximal guild delivered {v}", ex.name(*p)));
    }
}

#[derive(Clone, Debug)]
struct Op<'a> {
    id: &'a str,
    process: ProcessId,
    value: Option<&'a Value>,
    invoked: u64,
    responded: Option<(u64, Option<&'a Value>)>,
}

fn history(trace: &Trace) -> (Vec<Op<'_>>, Vec<Op<'_>>) {
    let mut ops: Vec<Op<'_>> = Vec::new();
    let mut is_write: Vec<bool> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for r in &trace.records {
        match &r.event {
            Event::Invoke { process, id, op } => {
                let value = match op {
                    Operation::Write { value } => Some(value),
                    _ => None,
                };
                index.insert(id, ops.len());
                is_write.push(matches!(op, Operation::Write { .. }));
                ops.push(Op { id, process: *process, value, invoked: r.step, responded: None });
            }
            Event::Response { id, value, .. } => {
                if let Some(&i) = index.get(id.as_str()) {
                    ops[i].responded = Some((r.step, value.as_ref()));
                }
            }
            _ => {}
        }
    }
    let (writes, reads): (Vec<_>, Vec<_>) = ops.into_iter().zip(is_write).partition(|(_, w)| *w);
    (
        writes.into_iter().map(|(o, _)| o).collect(),
        reads.into_iter().map(|(o, _)| o).collect(),
    )
}

/// Regular-register safety, liveness, signed integrity and timestamp monotonicity.
pub fn check_register(ex: &Execution<'_>, report: &mut CheckReport) {
    let writer = ex.setup.protocol.writer().expect("register has a writer");
    let reader = ex.setup.protocol.reader().expect("register has a reader");
    let c = &ex.classification;
    let (writes, reads) = history(ex.trace);
    let initial = Value::initial();

    let scoped = c.is_wise(writer) && c.is_wise(reader);
    report.evaluated("safety");
    for r in &reads {
        let Some((end, Some(got))) = r.responded else { continue };
        // Latest write completed before the read began, then every write overlapping it.
        let preceding = writes
            .iter()
            .rev()
            .find(|w| w.responded.is_some_and(|(s, _)| s < r.invoked))
            .and_then(|w| w.value)
            .unwrap_or(&initial);
        let mut allowed = vec![preceding];
        allowed.extend(
            writes
                .iter()
                .filter(|w| w.invoked < end && w.responded.is_none_or(|(s, _)| s > r.invoked))
                .filter_map(|w| w.value),
        );
        if !allowed.contains(&got) {
            let detail = format!(
                "read `{}` by {} returned {got}; allowed {}",
                r.id,
                ex.name(r.process),
                allowed.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("|")
            );
            if scoped {
                report.violation("safety", detail);
            } else {
                report.observation("unscoped-safety", detail);
            }
        }
    }

    if !ex.trace.truncated {
        report.evaluated("liveness");
        for op in writes.iter().chain(&reads) {
            if op.responded.is_none() && c.is_wise(op.process) {
                report.violation(
                    "liveness",
                    format!("operation `{}` of wise {} never completed", op.id, ex.name(op.process)),
                );
            }
        }
    }

    if ex.setup.protocol.kind() == ProtocolKind::AuthRegister {
        report.evaluated("signed-integrity");
        for r in reads.iter().filter(|r| c.is_correct(r.process)) {
            let Some((end, Some(got))) = r.responded else { continue };
            let written = *got == initial || writes.iter().any(|w| w.invoked < end && w.value == Some(got));
            if !written {
                report.violation(
                    "signed-integrity",
                    format!("read `{}` by {} returned {got}, which was never written", r.id, ex.name(r.process)),
                );
            }
        }
    }

    report.evaluated("monotonicity");
    let mut last: HashMap<ProcessId, (u64, Option<u64>)> = HashMap::new();
    for r in &ex.trace.records {
        if let Event::State { process, ts, pts } = &r.event {
            if let Some((lts, lpts)) = last.get(process) {
                if ts < lts || matches!((pts, lpts), (Some(a), Some(b)) if a < b) {
                    report.violation(
                        "monotonicity",
                        format!("step {}: timestamps of {} decreased", r.step, ex.name(*process)),
                    );
                }
            }
            last.insert(*process, (*ts, *pts));
        }
    }
}
