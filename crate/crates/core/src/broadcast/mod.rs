//! Single-instance consistent and reliable broadcast with a designated sender.
//!
//! Quorum and kernel guards test containment: the set of processes reporting
//! `m` must include some quorum (kernel), never equal one exactly.

mod consistent;
mod reliable;

pub use consistent::ConsistentBroadcast;
pub use reliable::ReliableBroadcast;

use crate::algebra::{ProcessId, ProcessSet, SetFamily};
use crate::sim::Value;

/// Processes whose recorded message equals `m`.
fn holders(slots: &[Option<Value>], m: &Value) -> ProcessSet {
    (0..slots.len())
        .filter(|&j| slots[j].as_ref() == Some(m))
        .map(ProcessId)
        .collect()
}

/// Distinct recorded messages in value order.
fn candidates(slots: &[Option<Value>]) -> Vec<&Value> {
    let mut out: Vec<&Value> = slots.iter().flatten().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// The first message, in value order, whose reporters include a member of `family`.
pub fn family_hit(slots: &[Option<Value>], family: &SetFamily) -> Option<Value> {
    candidates(slots)
        .into_iter()
        .find(|m| family.has_member_within(holders(slots, m)))
        .cloned()
}

/// `family_hit` against a kernel system.
pub fn kernel_hit(readys: &[Option<Value>], kernels: &SetFamily) -> Option<Value> {
    family_hit(readys, kernels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(ix: &[usize]) -> ProcessSet {
        ProcessSet::from_indices(ix.iter().copied())
    }

    #[test]
    fn kernel_hit_examples() {
        let x = Value::from("x");
        let k2 = SetFamily::new_minimal(6, [s(&[0]), s(&[1])]).unwrap();
        let mut readys = vec![None; 6];
        assert_eq!(kernel_hit(&readys, &k2), None);
        readys[0] = Some(x.clone());
        assert_eq!(kernel_hit(&readys, &k2), Some(x.clone()));

        let k1 = SetFamily::new_minimal(6, [s(&[0]), s(&[2])]).unwrap();
        readys[2] = Some(x.clone());
        assert_eq!(kernel_hit(&readys, &k1), Some(x));
    }

    #[test]
    fn needs_a_whole_member() {
        let k = SetFamily::new_minimal(4, [s(&[0, 1])]).unwrap();
        let readys = vec![Some(Value::from("x")), Some(Value::from("u")), None, None];
        assert_eq!(kernel_hit(&readys, &k), None);
    }
}
