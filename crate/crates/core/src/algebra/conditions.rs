//! Existence conditions and quorum-system checks, symmetric and asymmetric.

use std::fmt;

use serde::Serialize;

use super::family::{check_same_universe, AsymmetricFamily, SetFamily};
use super::process::{ProcessId, ProcessSet};
use crate::error::{Error, Result};

/// Three fail-prone sets covering the universe: `P ⊆ F_i ∪ F_j ∪ F_ij`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct B3Violation {
    pub i: ProcessId,
    pub j: ProcessId,
    pub f_i: ProcessSet,
    pub f_j: ProcessSet,
    pub f_ij: ProcessSet,
}

impl fmt::Display for B3Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "i={} j={} F_i={} F_j={} F_ij={}",
            self.i, self.j, self.f_i, self.f_j, self.f_ij
        )
    }
}

/// Why an array of quorum systems is not an asymmetric Byzantine quorum system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AsymBqsViolation {
    /// `Q_i ∩ Q_j ⊆ F_ij` for some `F_ij ∈ F_i* ∩ F_j*`.
    Consistency {
        i: ProcessId,
        j: ProcessId,
        q_i: ProcessSet,
        q_j: ProcessSet,
        f_ij: ProcessSet,
    },
    /// No quorum of `i` avoids the fail-prone set `f_i`.
    Availability { i: ProcessId, f_i: ProcessSet },
}

impl fmt::Display for AsymBqsViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AsymBqsViolation::Consistency { i, j, q_i, q_j, f_ij } => write!(
                f,
                "consistency: Q_{i}={q_i} and Q_{j}={q_j} intersect inside F_ij={f_ij}"
            ),
            AsymBqsViolation::Availability { i, f_i } => {
                write!(f, "availability: no quorum of {i} avoids {f_i}")
            }
        }
    }
}

/// No three fail-prone sets cover the universe.
pub fn check_q3(f: &SetFamily) -> bool {
    let all = f.universe();
    let sets = f.sets();
    for (a, x) in sets.iter().enumerate() {
        for (b, y) in sets.iter().enumerate().skip(a) {
            let xy = x.union(*y);
            if sets.iter().skip(b).any(|z| all.is_subset(xy.union(*z))) {
                return false;
            }
        }
    }
    true
}

/// Checks the B³ condition, returning the first violation in canonical order.
///
/// `F_ij` ranges over the maximal elements of `F_i* ∩ F_j*`; a covering triple
/// with a smaller `F_ij` is also a covering triple with any superset of it.
pub fn check_b3(ff: &AsymmetricFamily) -> std::result::Result<(), B3Violation> {
    let n = ff.universe_size();
    let all = ProcessSet::full(n);
    for (i, fi) in ff.iter() {
        for (j, fj) in ff.iter() {
            let common = fi
                .common_closure(fj)
                .expect("entries of an asymmetric family share a universe");
            for &f_i in fi {
                for &f_j in fj {
                    let pair = f_i.union(f_j);
                    if let Some(&f_ij) = common.iter().find(|c| all.is_subset(pair.union(**c))) {
                        return Err(B3Violation { i, j, f_i, f_j, f_ij });
                    }
                }
            }
        }
    }
    Ok(())
}

/// The bijective complement `{P \ F | F ∈ f}`.
pub fn canonical_quorums(f: &SetFamily) -> SetFamily {
    f.complements()
}

/// Canonical quorum system of every process.
pub fn canonical_asymmetric(ff: &AsymmetricFamily) -> AsymmetricFamily {
    ff.map(|_, f| canonical_quorums(f))
}

/// Symmetric Byzantine quorum system check (consistency and availability).
pub fn is_bqs(q: &SetFamily, f: &SetFamily) -> Result<bool> {
    check_same_universe(q, f)?;
    let consistent = q.iter().all(|q1| {
        q.iter()
            .all(|q2| !f.closure_contains(q1.intersection(*q2)))
    });
    let available = f
        .iter()
        .all(|fs| q.iter().any(|qs| !fs.intersects(*qs)));
    Ok(consistent && available)
}

/// Asymmetric Byzantine quorum system check; returns the first violation found.
pub fn is_asym_bqs(
    qq: &AsymmetricFamily,
    ff: &AsymmetricFamily,
) -> Result<std::result::Result<(), AsymBqsViolation>> {
    if qq.universe_size() != ff.universe_size() {
        return Err(Error::UniverseMismatch {
            expected: ff.universe_size(),
            found: qq.universe_size(),
        });
    }
    for (i, fi) in ff.iter() {
        let qi = qq.get(i);
        for &f_i in fi {
            if !qi.iter().any(|q| !q.intersects(f_i)) {
                return Ok(Err(AsymBqsViolation::Availability { i, f_i }));
            }
        }
    }
    for (i, fi) in ff.iter() {
        for (j, fj) in ff.iter() {
            let common = fi.common_closure(fj)?;
            for &q_i in qq.get(i) {
                for &q_j in qq.get(j) {
                    let meet = q_i.intersection(q_j);
                    if let Some(&f_ij) = common.iter().find(|c| meet.is_subset(**c)) {
                        return Ok(Err(AsymBqsViolation::Consistency { i, j, q_i, q_j, f_ij }));
                    }
                }
            }
        }
    }
    Ok(Ok(()))
}
