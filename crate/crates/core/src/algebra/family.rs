use std::fmt;

use super::process::{ProcessId, ProcessSet, MAX_PROCESSES};
use crate::error::{Error, Result};

/// An antichain of process sets over a universe of `n` processes.
///
/// Fail-prone systems, quorum systems, kernel systems and core-set systems
/// all share this shape. Sets are kept sorted by `(cardinality, bitmask)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SetFamily {
    n: usize,
    sets: Vec<ProcessSet>,
}

impl SetFamily {
    /// Builds a family keeping only the maximal sets (fail-prone convention).
    pub fn new<I: IntoIterator<Item = ProcessSet>>(n: usize, sets: I) -> Result<Self> {
        let sets = collect_in_universe(n, sets)?;
        Ok(SetFamily {
            n,
            sets: maximal_elements(sets),
        })
    }

    /// Builds a family keeping only the minimal sets.
    ///
    /// Quorum-like families are upward closed in use (a superset of a quorum
    /// satisfies every "received from a quorum" guard), so their redundant
    /// members are the supersets.
    pub fn new_minimal<I: IntoIterator<Item = ProcessSet>>(n: usize, sets: I) -> Result<Self> {
        let sets = collect_in_universe(n, sets)?;
        Ok(SetFamily {
            n,
            sets: minimal_elements(sets),
        })
    }

    /// The family with no members.
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_PROCESSES);
        SetFamily { n, sets: Vec::new() }
    }

    /// `{∅}`: nothing may fail.
    pub fn nothing(n: usize) -> Self {
        assert!(n <= MAX_PROCESSES);
        SetFamily {
            n,
            sets: vec![ProcessSet::EMPTY],
        }
    }

    pub(crate) fn from_sorted_antichain(n: usize, sets: Vec<ProcessSet>) -> Self {
        debug_assert!(is_antichain(&sets));
        SetFamily { n, sets }
    }

    pub fn universe_size(&self) -> usize {
        self.n
    }

    pub fn universe(&self) -> ProcessSet {
        ProcessSet::full(self.n)
    }

    pub fn sets(&self) -> &[ProcessSet] {
        &self.sets
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ProcessSet> {
        self.sets.iter()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn contains_set(&self, s: ProcessSet) -> bool {
        self.sets.contains(&s)
    }

    /// `x ∈ self*`: some member contains `x`.
    pub fn closure_contains(&self, x: ProcessSet) -> bool {
        self.sets.iter().any(|a| x.is_subset(*a))
    }

    /// First member (in canonical order) contained in `x`, if any.
    pub fn member_within(&self, x: ProcessSet) -> Option<ProcessSet> {
        self.sets.iter().copied().find(|q| q.is_subset(x))
    }

    /// Whether some member is contained in `x`.
    pub fn has_member_within(&self, x: ProcessSet) -> bool {
        self.member_within(x).is_some()
    }

    /// Maximal elements of `self* ∩ other*`.
    pub fn common_closure(&self, other: &SetFamily) -> Result<SetFamily> {
        check_same_universe(self, other)?;
        let pairwise = self
            .sets
            .iter()
            .flat_map(|a| other.sets.iter().map(move |b| a.intersection(*b)));
        SetFamily::new(self.n, pairwise)
    }

    /// Member-wise complement `{P \ A | A ∈ self}`.
    pub fn complements(&self) -> SetFamily {
        let mut sets: Vec<_> = self.sets.iter().map(|s| s.complement(self.n)).collect();
        sort_canonical(&mut sets);
        SetFamily::from_sorted_antichain(self.n, sets)
    }
}

impl<'a> IntoIterator for &'a SetFamily {
    type Item = &'a ProcessSet;
    type IntoIter = std::slice::Iter<'a, ProcessSet>;

    fn into_iter(self) -> Self::IntoIter {
        self.sets.iter()
    }
}

impl fmt::Display for SetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, s) in self.sets.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for SetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SetFamily(n={}, {})", self.n, self)
    }
}

/// One family per process: `[F_1, .., F_n]` or `[Q_1, .., Q_n]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AsymmetricFamily {
    per_process: Vec<SetFamily>,
}

impl AsymmetricFamily {
    pub fn new(per_process: Vec<SetFamily>) -> Result<Self> {
        let n = per_process.len();
        if n == 0 || n > MAX_PROCESSES {
            return Err(Error::InvalidArgument(format!(
                "asymmetric family needs 1..={MAX_PROCESSES} entries, got {n}"
            )));
        }
        if let Some(bad) = per_process.iter().find(|f| f.universe_size() != n) {
            return Err(Error::UniverseMismatch {
                expected: n,
                found: bad.universe_size(),
            });
        }
        Ok(AsymmetricFamily { per_process })
    }

    pub fn universe_size(&self) -> usize {
        self.per_process.len()
    }

    pub fn get(&self, p: ProcessId) -> &SetFamily {
        &self.per_process[p.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ProcessId, &SetFamily)> {
        self.per_process
            .iter()
            .enumerate()
            .map(|(i, f)| (ProcessId(i), f))
    }

    pub fn families(&self) -> &[SetFamily] {
        &self.per_process
    }

    pub fn map<F>(&self, mut f: F) -> AsymmetricFamily
    where
        F: FnMut(ProcessId, &SetFamily) -> SetFamily,
    {
        AsymmetricFamily {
            per_process: self.iter().map(|(p, fam)| f(p, fam)).collect(),
        }
    }
}

/// Keeps the maximal elements of `sets`, sorted canonically. Duplicates collapse.
pub fn normalize_antichain<I: IntoIterator<Item = ProcessSet>>(n: usize, sets: I) -> Result<SetFamily> {
    SetFamily::new(n, sets)
}

/// `Θ(k, base)`: all `k`-element subsets of `base`.
pub fn theta(n: usize, k: usize, base: ProcessSet) -> Result<SetFamily> {
    if base.span() > n {
        return Err(Error::InvalidArgument(format!(
            "base set {base} is outside a universe of {n} processes"
        )));
    }
    if k > base.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot choose {k} processes out of {}",
            base.len()
        )));
    }
    let members: Vec<ProcessId> = base.iter().collect();
    let mut out = Vec::new();
    k_subsets(&members, k, &mut |s| out.push(s));
    sort_canonical(&mut out);
    Ok(SetFamily::from_sorted_antichain(n, out))
}

/// `A ∗ B = {A ∪ B | A ∈ a, B ∈ b}`, normalized to its maximal elements.
pub fn star(a: &SetFamily, b: &SetFamily) -> Result<SetFamily> {
    check_same_universe(a, b)?;
    let unions = a
        .iter()
        .flat_map(|x| b.iter().map(move |y| x.union(*y)));
    SetFamily::new(a.universe_size(), unions)
}

/// `t` dominates `s` when every set of `s` is contained in some set of `t`.
pub fn dominates(t: &SetFamily, s: &SetFamily) -> bool {
    s.iter().all(|x| t.closure_contains(*x))
}

/// `x ∈ f*`.
pub fn downward_closure_contains(f: &SetFamily, x: ProcessSet) -> bool {
    f.closure_contains(x)
}

pub(crate) fn check_same_universe(a: &SetFamily, b: &SetFamily) -> Result<()> {
    if a.universe_size() != b.universe_size() {
        return Err(Error::UniverseMismatch {
            expected: a.universe_size(),
            found: b.universe_size(),
        });
    }
    Ok(())
}

/// Calls `emit` for every `k`-subset of `members`.
pub(crate) fn k_subsets(members: &[ProcessId], k: usize, emit: &mut dyn FnMut(ProcessSet)) {
    fn go(
        members: &[ProcessId],
        k: usize,
        start: usize,
        acc: ProcessSet,
        emit: &mut dyn FnMut(ProcessSet),
    ) {
        if k == 0 {
            emit(acc);
            return;
        }
        for i in start..=(members.len() - k) {
            go(members, k - 1, i + 1, acc.with(members[i]), emit);
        }
    }
    if k <= members.len() {
        go(members, k, 0, ProcessSet::EMPTY, emit);
    }
}

fn collect_in_universe<I: IntoIterator<Item = ProcessSet>>(n: usize, sets: I) -> Result<Vec<ProcessSet>> {
    if n > MAX_PROCESSES {
        return Err(Error::InvalidArgument(format!(
            "universe of {n} processes exceeds {MAX_PROCESSES}"
        )));
    }
    let sets: Vec<ProcessSet> = sets.into_iter().collect();
    if let Some(bad) = sets.iter().find(|s| s.span() > n) {
        return Err(Error::InvalidArgument(format!(
            "set {bad} is outside a universe of {n} processes"
        )));
    }
    Ok(sets)
}

pub(crate) fn sort_canonical(sets: &mut Vec<ProcessSet>) {
    sets.sort_by_key(|s| s.canonical_key());
    sets.dedup();
}

fn maximal_elements(mut sets: Vec<ProcessSet>) -> Vec<ProcessSet> {
    sort_canonical(&mut sets);
    let keep: Vec<bool> = sets
        .iter()
        .map(|s| !sets.iter().any(|t| s.is_proper_subset(*t)))
        .collect();
    sets.into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect()
}

fn minimal_elements(mut sets: Vec<ProcessSet>) -> Vec<ProcessSet> {
    sort_canonical(&mut sets);
    let mut out: Vec<ProcessSet> = Vec::with_capacity(sets.len());
    // Sorted by cardinality, so any subset of `s` is already in `out`.
    for s in sets {
        if !out.iter().any(|m| m.is_subset(s)) {
            out.push(s);
        }
    }
    out
}

pub(crate) fn is_antichain(sets: &[ProcessSet]) -> bool {
    sets.iter().enumerate().all(|(i, a)| {
        sets.iter()
            .enumerate()
            .all(|(j, b)| i == j || !a.is_subset(*b))
    })
}
