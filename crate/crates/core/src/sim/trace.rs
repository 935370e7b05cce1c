use serde_json::{json, Map, Value as Json};

use super::machine::Operation;
use super::message::{Envelope, Value};
use crate::algebra::ProcessId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DeliveryEvent {
    CDeliver,
    RDeliver,
}

impl DeliveryEvent {
    pub fn name(self) -> &'static str {
        match self {
            DeliveryEvent::CDeliver => "c-deliver",
            DeliveryEvent::RDeliver => "r-deliver",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Invoke {
        process: ProcessId,
        id: String,
        op: Operation,
    },
    Send(Envelope),
    Deliver(Envelope),
    Response {
        process: ProcessId,
        id: String,
        op: &'static str,
        value: Option<Value>,
    },
    Output {
        process: ProcessId,
        event: DeliveryEvent,
        value: Value,
    },
    State {
        process: ProcessId,
        ts: u64,
        pts: Option<u64>,
    },
    End {
        truncated: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub step: u64,
    pub event: Event,
}

/// Everything observable in one execution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub names: Vec<String>,
    pub records: Vec<Record>,
    pub truncated: bool,
    pub steps: u64,
}

impl Trace {
    pub fn name(&self, p: ProcessId) -> &str {
        &self.names[p.0]
    }

    pub fn record_json(&self, r: &Record) -> Json {
        let mut o = Map::new();
        o.insert("step".into(), json!(r.step));
        let name = |p: ProcessId| Json::String(self.name(p).to_string());
        match &r.event {
            Event::Invoke { process, id, op } => {
                o.insert("kind".into(), json!("invoke"));
                o.insert("process".into(), name(*process));
                o.insert("id".into(), json!(id));
                if let Json::Object(fields) = serde_json::to_value(op).expect("operations serialize") {
                    o.extend(fields);
                }
            }
            Event::Send(e) | Event::Deliver(e) => {
                let kind = if matches!(r.event, Event::Send(_)) { "send" } else { "deliver" };
                o.insert("kind".into(), json!(kind));
                o.insert("from".into(), name(e.from));
                o.insert("to".into(), name(e.to));
                o.insert("seq".into(), json!(e.seq));
                o.insert("msg".into(), serde_json::to_value(&e.msg).expect("messages serialize"));
            }
            Event::Response { process, id, op, value } => {
                o.insert("kind".into(), json!("response"));
                o.insert("process".into(), name(*process));
                o.insert("id".into(), json!(id));
                o.insert("op".into(), json!(op));
                if let Some(v) = value {
                    o.insert("value".into(), json!(v));
                }
            }
            Event::Output { process, event, value } => {
                o.insert("kind".into(), json!("output"));
                o.insert("process".into(), name(*process));
                o.insert("event".into(), json!(event.name()));
                o.insert("value".into(), json!(value));
            }
            Event::State { process, ts, pts } => {
                o.insert("kind".into(), json!("state"));
                o.insert("process".into(), name(*process));
                o.insert("ts".into(), json!(ts));
                if let Some(pts) = pts {
                    o.insert("pts".into(), json!(pts));
                }
            }
            Event::End { truncated } => {
                o.insert("kind".into(), json!("end"));
                o.insert("truncated".into(), json!(truncated));
            }
        }
        Json::Object(o)
    }

    /// One JSON object per line, newline-terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&self.record_json(r).to_string());
            out.push('\n');
        }
        out
    }

    /// Delivery outputs of each process, indexed by process.
    pub fn deliveries(&self) -> Vec<Vec<Value>> {
        let mut out = vec![Vec::new(); self.names.len()];
        for r in &self.records {
            if let Event::Output { process, value, .. } = &r.event {
                out[process.0].push(value.clone());
            }
        }
        out
    }

    /// Response value of the invocation `id`, if it completed.
    pub fn response(&self, id: &str) -> Option<Option<&Value>> {
        self.records.iter().find_map(|r| match &r.event {
            Event::Response { id: rid, value, .. } if rid == id => Some(value.as_ref()),
            _ => None,
        })
    }
}
