//! Kernels (minimal hitting sets of a quorum system) and core sets.

use super::family::{k_subsets, sort_canonical, SetFamily};
use super::process::ProcessSet;
use crate::error::{Error, Result};

/// All kernels of `q`: the inclusion-minimal sets intersecting every quorum.
///
/// Built incrementally with Berge's transversal construction: the minimal
/// transversals of `H ∪ {E}` are the minimal elements of
/// `{T | T ∈ Tr(H), T ∩ E ≠ ∅} ∪ {T ∪ {v} | T ∈ Tr(H), v ∈ E}`.
pub fn kernels(q: &SetFamily) -> Result<SetFamily> {
    if q.is_empty() {
        return Err(Error::InvalidArgument(
            "kernels of an empty quorum system are undefined".into(),
        ));
    }
    let mut transversals = vec![ProcessSet::EMPTY];
    for &edge in q {
        if edge.is_empty() {
            // Nothing hits the empty quorum.
            return Ok(SetFamily::empty(q.universe_size()));
        }
        let mut next = Vec::with_capacity(transversals.len() * edge.len());
        for &t in &transversals {
            if t.intersects(edge) {
                next.push(t);
            } else {
                next.extend(edge.iter().map(|v| t.with(v)));
            }
        }
        transversals = minimal(next);
    }
    Ok(SetFamily::from_sorted_antichain(q.universe_size(), transversals))
}

/// All core sets of `f`: the minimal sets not contained in any fail-prone set.
///
/// Enumerates candidates by increasing cardinality, skipping supersets of
/// core sets already found. A minimal core set needs at most one member
/// outside each fail-prone set, so the search stops at `|f|`.
pub fn core_sets(f: &SetFamily) -> SetFamily {
    let n = f.universe_size();
    let members: Vec<_> = f.universe().iter().collect();
    let mut found: Vec<ProcessSet> = Vec::new();
    let max_k = f.len().min(n);
    for k in 0..=max_k {
        let mut level = Vec::new();
        k_subsets(&members, k, &mut |c| {
            if found.iter().any(|m| m.is_subset(c)) {
                return;
            }
            if !f.closure_contains(c) {
                level.push(c);
            }
        });
        found.extend(level);
    }
    sort_canonical(&mut found);
    SetFamily::from_sorted_antichain(n, found)
}

fn minimal(mut sets: Vec<ProcessSet>) -> Vec<ProcessSet> {
    sort_canonical(&mut sets);
    let mut out: Vec<ProcessSet> = Vec::with_capacity(sets.len());
    for s in sets {
        if !out.iter().any(|m| m.is_subset(s)) {
            out.push(s);
        }
    }
    out
}
