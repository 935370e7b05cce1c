//! Scenario files: a trust assumption, a protocol instance, an adversary and
//! a schedule, plus optional expected outcomes.
//!
//! ```json
//! {
//!   "trust": "../trust/fb.json",
//!   "protocol": "consistent-bcast",
//!   "sender": "p4",
//!   "faulty": ["p4", "p5"],
//!   "scripts": {"p4": {"rules": []}, "p5": {"rules": []}},
//!   "invocations": [],
//!   "schedule": {"seed": 7, "script": [{"deliver": {"from": "p4", "to": "p1"}}]},
//!   "expect": {"delivered": {"p1": "x", "p2": null}, "guild": ["p1", "p2", "p3"]}
//! }
//! ```
//!
//! `trust` is a path relative to the scenario file or an inline trust document.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Deserializer};
use serde_json::{json, Value as Json};

use crate::algebra::{Label, ProcessId, ProcessSet};
use crate::check::{check_trace, CheckReport, Severity};
use crate::config::{parse_trust_value, TrustSpec};
use crate::error::{Error, Result};
use crate::sim::{
    run, ByzantineScript, Invocation, Operation, Protocol, ProtocolKind, Schedule, ScheduleStep, SimSetup, Trace,
    Value, DEFAULT_MAX_STEPS,
};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default)]
    description: Option<String>,
    trust: Json,
    protocol: ProtocolKind,
    #[serde(default)]
    sender: Option<String>,
    #[serde(default)]
    writer: Option<String>,
    #[serde(default)]
    reader: Option<String>,
    #[serde(default)]
    faulty: Vec<String>,
    #[serde(default)]
    scripts: BTreeMap<String, ByzantineScript<String>>,
    #[serde(default)]
    invocations: Vec<InvocationDoc>,
    #[serde(default)]
    schedule: ScheduleDoc,
    #[serde(default)]
    max_steps: Option<u64>,
    #[serde(default)]
    expect: ExpectDoc,
}

#[derive(Deserialize)]
struct InvocationDoc {
    #[serde(default)]
    id: Option<String>,
    process: String,
    #[serde(flatten)]
    op: Operation,
    #[serde(default)]
    after: Vec<String>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleDoc {
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    script: Vec<ScheduleStep<String>>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpectDoc {
    #[serde(default)]
    delivered: BTreeMap<String, Option<Value>>,
    #[serde(default)]
    reads: BTreeMap<String, Value>,
    #[serde(default, deserialize_with = "present")]
    guild: Option<Option<Vec<String>>>,
    #[serde(default)]
    classification: BTreeMap<String, Label>,
    #[serde(default)]
    safety_violation: Option<bool>,
    #[serde(default)]
    truncated: Option<bool>,
    #[serde(default)]
    violations: Option<Vec<String>>,
}

/// Distinguishes an explicit `null` from an absent field.
fn present<'de, D: Deserializer<'de>, T: Deserialize<'de>>(d: D) -> std::result::Result<Option<Option<T>>, D::Error> {
    Option::<T>::deserialize(d).map(Some)
}

/// Declared outcomes, checked after the run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Expectations {
    /// `None` means the process must not deliver.
    pub delivered: Vec<(ProcessId, Option<Value>)>,
    /// Read invocation id and the value it must return.
    pub reads: Vec<(String, Value)>,
    /// `Some(None)` means the execution must have no guild.
    pub guild: Option<Option<ProcessSet>>,
    pub classification: Vec<(ProcessId, Label)>,
    /// Whether the safety checker must flag a stale read, scoped or not.
    pub safety_violation: Option<bool>,
    pub truncated: Option<bool>,
    /// Names of the checks that must report a violation, and no others.
    pub violations: Option<Vec<String>>,
}

/// A resolved scenario, ready to run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub description: Option<String>,
    pub spec: TrustSpec,
    pub setup: SimSetup,
    pub expect: Expectations,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        parse_scenario(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

/// Parses a scenario; relative trust paths resolve against `base`.
pub fn parse_scenario(text: &str, base: &Path) -> Result<Scenario> {
    let doc: ScenarioDoc = serde_json::from_str(text)?;
    let spec = match &doc.trust {
        Json::String(rel) => TrustSpec::load(&base.join(rel))?,
        Json::Object(_) => parse_trust_value(&doc.trust)?,
        other => return Err(Error::Scenario(format!("`trust` must be a path or an object, got {other}"))),
    };
    let mut id = |name: String| spec.id(&name);
    let role = |field: &str, value: &Option<String>| -> Result<ProcessId> {
        let name = value
            .as_ref()
            .ok_or_else(|| Error::Scenario(format!("protocol {} needs `{field}`", doc.protocol.name())))?;
        spec.id(name)
    };
    let protocol = match doc.protocol {
        ProtocolKind::AuthRegister => Protocol::AuthRegister {
            writer: role("writer", &doc.writer)?,
            reader: role("reader", &doc.reader)?,
        },
        ProtocolKind::DwRegister => Protocol::DwRegister {
            writer: role("writer", &doc.writer)?,
            reader: role("reader", &doc.reader)?,
        },
        ProtocolKind::ConsistentBcast => Protocol::ConsistentBcast { sender: role("sender", &doc.sender)? },
        ProtocolKind::ReliableBcast => Protocol::ReliableBcast { sender: role("sender", &doc.sender)? },
    };
    let faulty = spec.set_of(&doc.faulty)?;
    let mut scripts = BTreeMap::new();
    for (name, script) in doc.scripts {
        let p = spec.id(&name)?;
        scripts.insert(p, script.resolve(&mut id)?);
    }

    let mut counters: HashMap<&'static str, usize> = HashMap::new();
    let invocations = doc
        .invocations
        .into_iter()
        .map(|inv| {
            let k = counters.entry(inv.op.name()).or_insert(0);
            *k += 1;
            Ok(Invocation {
                id: inv.id.unwrap_or_else(|| format!("{}{k}", &inv.op.name()[..1])),
                process: spec.id(&inv.process)?,
                op: inv.op,
                after: inv.after,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let script = doc
        .schedule
        .script
        .into_iter()
        .map(|s| {
            Ok(match s {
                ScheduleStep::Deliver { from, to } => ScheduleStep::Deliver { from: spec.id(&from)?, to: spec.id(&to)? },
                ScheduleStep::Invoke(i) => ScheduleStep::Invoke(i),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let e = doc.expect;
    let expect = Expectations {
        delivered: e
            .delivered
            .into_iter()
            .map(|(name, v)| Ok((spec.id(&name)?, v)))
            .collect::<Result<_>>()?,
        reads: e.reads.into_iter().collect(),
        guild: e.guild.map(|g| g.map(|names| spec.set_of(&names)).transpose()).transpose()?,
        classification: e
            .classification
            .into_iter()
            .map(|(name, l)| Ok((spec.id(&name)?, l)))
            .collect::<Result<_>>()?,
        safety_violation: e.safety_violation,
        truncated: e.truncated,
        violations: e.violations.map(|mut v| {
            v.sort();
            v.dedup();
            v
        }),
    };
    if let Some((id, _)) = expect.reads.iter().find(|(id, _)| !invocations.iter().any(|i| &i.id == id)) {
        return Err(Error::Scenario(format!("expected read `{id}` is not an invocation")));
    }

    let setup = SimSetup {
        protocol,
        faulty,
        scripts,
        invocations,
        schedule: Schedule {
            seed: doc.schedule.seed.unwrap_or(0),
            script,
        },
        max_steps: doc.max_steps.unwrap_or(DEFAULT_MAX_STEPS),
    };
    Ok(Scenario {
        description: doc.description,
        spec,
        setup,
        expect,
    })
}

/// One expectation and whether the run met it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpectationResult {
    pub name: &'static str,
    pub subject: Option<String>,
    pub want: Json,
    pub got: Json,
}

impl ExpectationResult {
    pub fn ok(&self) -> bool {
        self.want == self.got
    }
}

pub struct RunOutcome {
    pub trace: Trace,
    pub report: CheckReport,
    pub expectations: Vec<ExpectationResult>,
    pub truncation_expected: bool,
    pub violations_expected: bool,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        (self.violations_expected || self.report.is_clean())
            && self.expectations.iter().all(ExpectationResult::ok)
            && (!self.trace.truncated || self.truncation_expected)
    }

    /// Machine-readable verdicts, one JSON object per line.
    pub fn verdicts(&self, scenario: &Scenario) -> Vec<Json> {
        let spec = &scenario.spec;
        let mut out = Vec::new();
        let c = crate::algebra::classify(spec.fail_prone(), scenario.setup.faulty);
        if !scenario.setup.protocol.kind().is_register() {
            let deliveries = self.trace.deliveries();
            for p in spec.processes() {
                out.push(json!({
                    "verdict": "outcome",
                    "process": spec.name(p),
                    "label": c.label(p),
                    "delivered": deliveries[p.0].first(),
                }));
            }
        }
        for r in &self.trace.records {
            if let crate::sim::Event::Response { process, id, value: Some(v), .. } = &r.event {
                out.push(json!({"verdict": "read", "id": id, "process": spec.name(*process), "value": v}));
            }
        }
        for name in &self.report.checked {
            let ok = !self.report.violations().any(|f| f.check == *name);
            out.push(json!({"verdict": "check", "name": name, "ok": ok}));
        }
        for f in &self.report.findings {
            out.push(json!({
                "verdict": "finding",
                "check": f.check,
                "severity": f.severity,
                "detail": f.detail,
            }));
        }
        for e in &self.expectations {
            out.push(json!({
                "verdict": "expect",
                "name": e.name,
                "subject": e.subject,
                "want": e.want,
                "got": e.got,
                "ok": e.ok(),
            }));
        }
        out.push(json!({
            "verdict": "summary",
            "protocol": scenario.setup.protocol.kind(),
            "steps": self.trace.steps,
            "truncated": self.trace.truncated,
            "violations": self.report.violations().count(),
            "observations": self.report.findings.iter().filter(|f| f.severity == Severity::Observation).count(),
            "failed_expectations": self.expectations.iter().filter(|e| !e.ok()).count(),
            "pass": self.passed(),
        }));
        out
    }
}

/// Runs a scenario, optionally overriding its seed and step bound.
pub fn run_scenario(sc: &Scenario, seed: Option<u64>, max_steps: Option<u64>) -> Result<RunOutcome> {
    let mut setup = sc.setup.clone();
    if let Some(seed) = seed {
        setup.schedule.seed = seed;
    }
    if let Some(steps) = max_steps {
        setup.max_steps = steps;
    }
    let trace = run(&sc.spec, setup.clone())?;
    let report = check_trace(&sc.spec, &setup, &trace);
    let expectations = evaluate(sc, &trace, &report);
    Ok(RunOutcome {
        trace,
        report,
        expectations,
        truncation_expected: sc.expect.truncated == Some(true),
        violations_expected: sc.expect.violations.is_some(),
    })
}

fn evaluate(sc: &Scenario, trace: &Trace, report: &CheckReport) -> Vec<ExpectationResult> {
    let spec = &sc.spec;
    let e = &sc.expect;
    let mut out = Vec::new();
    let deliveries = trace.deliveries();
    for (p, want) in &e.delivered {
        out.push(ExpectationResult {
            name: "delivered",
            subject: Some(spec.name(*p).to_string()),
            want: json!(want),
            got: json!(deliveries[p.0].first()),
        });
    }
    for (id, want) in &e.reads {
        out.push(ExpectationResult {
            name: "read",
            subject: Some(id.clone()),
            want: json!(want),
            got: json!(trace.response(id).flatten()),
        });
    }
    if let Some(want) = &e.guild {
        let got = crate::algebra::maximal_guild(spec.quorums(), spec.fail_prone(), sc.setup.faulty);
        let names = |g: &Option<ProcessSet>| json!(g.map(|s| s.iter().map(|p| spec.name(p)).collect::<Vec<_>>()));
        out.push(ExpectationResult { name: "guild", subject: None, want: names(want), got: names(&got) });
    }
    if !e.classification.is_empty() {
        let c = crate::algebra::classify(spec.fail_prone(), sc.setup.faulty);
        for (p, want) in &e.classification {
            out.push(ExpectationResult {
                name: "classification",
                subject: Some(spec.name(*p).to_string()),
                want: json!(want),
                got: json!(c.label(*p)),
            });
        }
    }
    if let Some(want) = e.safety_violation {
        let got = report.flagged("safety") || report.flagged("unscoped-safety");
        out.push(ExpectationResult { name: "safety_violation", subject: None, want: json!(want), got: json!(got) });
    }
    if let Some(want) = &e.violations {
        let mut got: Vec<&str> = report.violations().map(|f| f.check).collect();
        got.sort_unstable();
        got.dedup();
        out.push(ExpectationResult { name: "violations", subject: None, want: json!(want), got: json!(got) });
    }
    if let Some(want) = e.truncated {
        out.push(ExpectationResult { name: "truncated", subject: None, want: json!(want), got: json!(trace.truncated) });
    }
    out
}
