//! Idealized signatures backed by an in-simulation registry.
//!
//! A tag is a digest of signer and message, so `sign` is deterministic, but
//! only the registry decides validity: a pair that was never signed does not
//! verify even when its tag is recomputed by someone else.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::algebra::ProcessId;
use crate::error::Error;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    pub signer: ProcessId,
    pub tag: [u8; 32],
}

impl Signature {
    pub(crate) fn compute(signer: ProcessId, message: &[u8]) -> Signature {
        let mut h = Sha256::new();
        h.update((signer.0 as u64).to_le_bytes());
        h.update(message);
        Signature {
            signer,
            tag: h.finalize().into(),
        }
    }

    /// A signature-shaped value nobody produced.
    pub fn forged(signer: ProcessId) -> Signature {
        Signature { signer, tag: [0; 32] }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.signer, hex::encode(self.tag))
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({}:{}..)", self.signer, &hex::encode(self.tag)[..8])
    }
}

impl FromStr for Signature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidArgument(format!("malformed signature `{s}`"));
        let (who, tag) = s.split_once(':').ok_or_else(bad)?;
        let index: usize = who.strip_prefix('p').and_then(|x| x.parse().ok()).ok_or_else(bad)?;
        if index == 0 {
            return Err(bad());
        }
        let bytes = hex::decode(tag).map_err(|_| bad())?;
        let tag: [u8; 32] = bytes.try_into().map_err(|_| bad())?;
        Ok(Signature {
            signer: ProcessId(index - 1),
            tag,
        })
    }
}

impl Serialize for Signature {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Record of every `(signer, message)` pair signed in one execution.
#[derive(Clone, Debug, Default)]
pub struct SignatureRegistry {
    signed: HashSet<(ProcessId, Vec<u8>)>,
}

impl SignatureRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Signs as `signer`. Callers are responsible for only signing as themselves.
    pub fn sign(&mut self, signer: ProcessId, message: &[u8]) -> Signature {
        self.signed.insert((signer, message.to_vec()));
        Signature::compute(signer, message)
    }

    pub fn verify(&self, signer: ProcessId, message: &[u8], sig: &Signature) -> bool {
        sig.signer == signer
            && self.signed.contains(&(signer, message.to_vec()))
            && *sig == Signature::compute(signer, message)
    }
}

/// Encoding of the signed register payload `write‖w‖ts‖v`.
pub fn write_payload(writer: ProcessId, ts: u64, value: &str) -> Vec<u8> {
    let mut out = Vec::with_capacity(40 + value.len());
    for field in [
        b"write".as_slice(),
        &(writer.0 as u64).to_le_bytes(),
        &ts.to_le_bytes(),
        value.as_bytes(),
    ] {
        out.extend_from_slice(&(field.len() as u64).to_le_bytes());
        out.extend_from_slice(field);
    }
    out
}
