//! Per-execution views of an asymmetric trust assumption: which correct
//! processes are wise or naive, and which of them form a guild.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::family::{theta, AsymmetricFamily};
use super::process::{ProcessId, ProcessSet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Faulty,
    Naive,
    Wise,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Faulty => "faulty",
            Label::Naive => "naive",
            Label::Wise => "wise",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    labels: Vec<Label>,
    actual_faulty: ProcessSet,
}

impl Classification {
    pub fn label(&self, p: ProcessId) -> Label {
        self.labels[p.0]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn actual_faulty(&self) -> ProcessSet {
        self.actual_faulty
    }

    pub fn with_label(&self, label: Label) -> ProcessSet {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == label)
            .map(|(i, _)| ProcessId(i))
            .collect()
    }

    pub fn wise(&self) -> ProcessSet {
        self.with_label(Label::Wise)
    }

    pub fn naive(&self) -> ProcessSet {
        self.with_label(Label::Naive)
    }

    pub fn is_wise(&self, p: ProcessId) -> bool {
        self.label(p) == Label::Wise
    }

    pub fn is_correct(&self, p: ProcessId) -> bool {
        self.label(p) != Label::Faulty
    }
}

/// Labels every process as faulty, naive or wise for the faulty set `actual_faulty`.
pub fn classify(ff: &AsymmetricFamily, actual_faulty: ProcessSet) -> Classification {
    let labels = ff
        .iter()
        .map(|(p, fp)| {
            if actual_faulty.contains(p) {
                Label::Faulty
            } else if fp.closure_contains(actual_faulty) {
                Label::Wise
            } else {
                Label::Naive
            }
        })
        .collect();
    Classification {
        labels,
        actual_faulty,
    }
}

/// Whether `g` is a guild: non-empty, all wise, and holding a quorum of each member.
pub fn is_guild(
    g: ProcessSet,
    qq: &AsymmetricFamily,
    ff: &AsymmetricFamily,
    actual_faulty: ProcessSet,
) -> bool {
    if g.is_empty() || g.span() > ff.universe_size() {
        return false;
    }
    let wise = classify(ff, actual_faulty).wise();
    g.is_subset(wise) && g.iter().all(|p| qq.get(p).has_member_within(g))
}

/// The maximal guild, if the execution has one.
///
/// Greatest fixpoint: start from all wise processes and drop members that
/// have no quorum inside the current set until nothing changes.
pub fn maximal_guild(
    qq: &AsymmetricFamily,
    ff: &AsymmetricFamily,
    actual_faulty: ProcessSet,
) -> Option<ProcessSet> {
    let mut g = classify(ff, actual_faulty).wise();
    loop {
        let keep: ProcessSet = g
            .iter()
            .filter(|p| qq.get(*p).has_member_within(g))
            .collect();
        if keep == g {
            break;
        }
        g = keep;
    }
    (!g.is_empty()).then_some(g)
}

/// Quorum size `⌈(n+f+1)/2⌉` of the threshold system.
pub fn threshold_quorum_size(n: usize, f: usize) -> usize {
    (n + f + 2) / 2
}

/// Kernel size `⌊(n-f+1)/2⌋` of the threshold system.
pub fn threshold_kernel_size(n: usize, f: usize) -> usize {
    (n - f).div_ceil(2)
}

/// Encodes the symmetric `f`-of-`n` threshold assumption as an asymmetric one.
///
/// Every process gets all `f`-subsets as fail-prone sets and all
/// `⌈(n+f+1)/2⌉`-subsets as quorums.
pub fn threshold_asym(n: usize, f: usize) -> Result<(AsymmetricFamily, AsymmetricFamily)> {
    if n == 0 || f >= n || n > super::process::MAX_PROCESSES {
        return Err(Error::InvalidArgument(format!(
            "threshold system needs 1 <= n <= 64 and f < n, got n={n} f={f}"
        )));
    }
    let all = ProcessSet::full(n);
    let fail = theta(n, f, all)?;
    let quorums = theta(n, threshold_quorum_size(n, f), all)?;
    Ok((
        AsymmetricFamily::new(vec![fail; n])?,
        AsymmetricFamily::new(vec![quorums; n])?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::conditions::canonical_asymmetric;
    use crate::algebra::fixtures::{f_a, f_b};
    use crate::algebra::hitting::kernels;

    fn s(ix: &[usize]) -> ProcessSet {
        ProcessSet::from_indices(ix.iter().copied())
    }

    #[test]
    fn classify_fa() {
        let c = classify(&f_a(), s(&[1, 3]));
        assert_eq!(
            c.labels(),
            &[Label::Naive, Label::Faulty, Label::Wise, Label::Faulty, Label::Wise]
        );
    }

    #[test]
    fn classify_fb() {
        let c = classify(&f_b(), s(&[0, 4]));
        assert_eq!(c.wise(), s(&[2, 5]));
        assert_eq!(c.naive(), s(&[1, 3]));
    }

    #[test]
    fn nobody_faulty_means_everybody_wise() {
        let c = classify(&f_b(), ProcessSet::EMPTY);
        assert_eq!(c.wise(), ProcessSet::full(6));
    }

    #[test]
    fn guilds_in_fb() {
        let fb = f_b();
        let qb = canonical_asymmetric(&fb);
        assert_eq!(maximal_guild(&qb, &fb, s(&[3, 4])), Some(s(&[0, 1, 2])));
        assert_eq!(maximal_guild(&qb, &fb, s(&[0, 4])), None);
        assert!(is_guild(s(&[0, 1, 2]), &qb, &fb, s(&[3, 4])));
        assert!(!is_guild(ProcessSet::EMPTY, &qb, &fb, s(&[3, 4])));
        assert!(!is_guild(s(&[0]), &qb, &fb, s(&[3, 4])));
    }

    #[test]
    fn threshold_encoding() {
        let (ff, qq) = threshold_asym(4, 1).unwrap();
        assert!(qq.families().iter().all(|q| q.iter().all(|s| s.len() == 3)));
        let (ff7, qq7) = threshold_asym(7, 2).unwrap();
        assert!(qq7.get(ProcessId(0)).iter().all(|s| s.len() == 5));
        assert!(kernels(qq7.get(ProcessId(0))).unwrap().iter().all(|k| k.len() == 3));
        assert!(ff7.get(ProcessId(3)).iter().all(|s| s.len() == 2));
        assert_eq!(maximal_guild(&qq, &ff, s(&[3])), Some(s(&[0, 1, 2])));

        let (ff1, qq1) = threshold_asym(1, 0).unwrap();
        assert_eq!(ff1.get(ProcessId(0)).sets(), &[ProcessSet::EMPTY]);
        assert_eq!(qq1.get(ProcessId(0)).sets(), &[s(&[0])]);

        assert!(threshold_asym(0, 0).is_err());
        assert!(threshold_asym(3, 3).is_err());
    }

    #[test]
    fn threshold_sizes() {
        assert_eq!(threshold_quorum_size(4, 1), 3);
        assert_eq!(threshold_kernel_size(4, 1), 2);
        assert_eq!(threshold_quorum_size(7, 2), 5);
        assert_eq!(threshold_kernel_size(7, 2), 3);
    }
}
