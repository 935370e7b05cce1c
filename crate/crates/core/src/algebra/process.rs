use std::fmt;

use serde::{Deserialize, Serialize};

/// Largest supported universe. Process sets are single 64-bit words.
pub const MAX_PROCESSES: usize = 64;

/// Index of a process in the universe `0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub usize);

impl ProcessId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Display names are 1-based to match the usual p1..pn convention.
        write!(f, "p{}", self.0 + 1)
    }
}

/// A subset of the process universe, stored as a bitmask.
///
/// The universe size is carried by the enclosing [`SetFamily`](super::SetFamily);
/// operations that need it (complement) take it explicitly.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessSet(u64);

impl ProcessSet {
    pub const EMPTY: ProcessSet = ProcessSet(0);

    pub const fn from_bits(bits: u64) -> Self {
        ProcessSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    /// The full universe `{0..n}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_PROCESSES, "universe of {n} processes exceeds {MAX_PROCESSES}");
        if n == MAX_PROCESSES {
            ProcessSet(u64::MAX)
        } else {
            ProcessSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(p: ProcessId) -> Self {
        assert!(p.0 < MAX_PROCESSES);
        ProcessSet(1u64 << p.0)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        indices
            .into_iter()
            .fold(ProcessSet::EMPTY, |acc, i| acc.with(ProcessId(i)))
    }

    pub fn with(self, p: ProcessId) -> Self {
        self.union(ProcessSet::singleton(p))
    }

    pub fn insert(&mut self, p: ProcessId) {
        *self = self.with(p);
    }

    pub fn remove(&mut self, p: ProcessId) {
        self.0 &= !(1u64 << p.0);
    }

    pub fn contains(self, p: ProcessId) -> bool {
        p.0 < MAX_PROCESSES && self.0 & (1u64 << p.0) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        ProcessSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        ProcessSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        ProcessSet(self.0 & !other.0)
    }

    pub fn complement(self, n: usize) -> Self {
        ProcessSet::full(n).difference(self)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_proper_subset(self, other: Self) -> bool {
        self != other && self.is_subset(other)
    }

    pub fn intersects(self, other: Self) -> bool {
        self.0 & other.0 != 0
    }

    /// Highest member index plus one, i.e. the smallest universe containing the set.
    pub fn span(self) -> usize {
        MAX_PROCESSES - self.0.leading_zeros() as usize
    }

    pub fn iter(self) -> ProcessIter {
        ProcessIter(self.0)
    }

    /// Canonical order used for every family: by cardinality, then by bitmask.
    pub fn canonical_key(self) -> (u32, u64) {
        (self.0.count_ones(), self.0)
    }
}

impl FromIterator<ProcessId> for ProcessSet {
    fn from_iter<T: IntoIterator<Item = ProcessId>>(iter: T) -> Self {
        iter.into_iter().fold(ProcessSet::EMPTY, ProcessSet::with)
    }
}

impl IntoIterator for ProcessSet {
    type Item = ProcessId;
    type IntoIter = ProcessIter;

    fn into_iter(self) -> ProcessIter {
        self.iter()
    }
}

/// Ascending iterator over the members of a [`ProcessSet`].
#[derive(Clone, Debug)]
pub struct ProcessIter(u64);

impl Iterator for ProcessIter {
    type Item = ProcessId;

    fn next(&mut self) -> Option<ProcessId> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(ProcessId(i))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for ProcessIter {}

impl fmt::Display for ProcessSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, p) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for ProcessSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
