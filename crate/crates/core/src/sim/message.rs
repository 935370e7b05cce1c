use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::ProcessId;
use crate::signature::Signature;

/// An opaque register value or broadcast payload.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Value(pub String);

impl Value {
    /// The initial register value `x0`.
    pub fn initial() -> Value {
        Value(String::new())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value(s.to_string())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("x0")
        } else {
            f.write_str(&self.0)
        }
    }
}

/// Protocol messages of all four protocols.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum Message {
    Write {
        ts: u64,
        value: Value,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sig: Option<Signature>,
    },
    Ack {
        ts: u64,
    },
    Read {
        rid: u64,
    },
    Value {
        rid: u64,
        ts: u64,
        value: Value,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sig: Option<Signature>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pts: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pv: Option<Value>,
    },
    Prewrite {
        ts: u64,
        value: Value,
    },
    Preack {
        ts: u64,
    },
    Send {
        m: Value,
    },
    Echo {
        m: Value,
    },
    Ready {
        m: Value,
    },
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::Write { .. } => MessageKind::Write,
            Message::Ack { .. } => MessageKind::Ack,
            Message::Read { .. } => MessageKind::Read,
            Message::Value { .. } => MessageKind::Value,
            Message::Prewrite { .. } => MessageKind::Prewrite,
            Message::Preack { .. } => MessageKind::Preack,
            Message::Send { .. } => MessageKind::Send,
            Message::Echo { .. } => MessageKind::Echo,
            Message::Ready { .. } => MessageKind::Ready,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageKind {
    Write,
    Ack,
    Read,
    Value,
    Prewrite,
    Preack,
    Send,
    Echo,
    Ready,
}

/// A message in transit on the channel `from → to`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub from: ProcessId,
    pub to: ProcessId,
    /// Position on the channel, starting at 0.
    pub seq: u64,
    pub msg: Message,
}
