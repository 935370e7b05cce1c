//! The two worked trust assumptions, built directly from the operators.

use super::family::{star, theta, AsymmetricFamily, SetFamily};
use super::process::ProcessSet;

fn s(ix: &[usize]) -> ProcessSet {
    ProcessSet::from_indices(ix.iter().copied())
}

/// Five processes; indices are 0-based (`p1` is index 0).
pub(crate) fn f_a() -> AsymmetricFamily {
    let n = 5;
    let one_of = |ix: &[usize]| theta(n, 1, s(ix)).unwrap();
    AsymmetricFamily::new(vec![
        one_of(&[1, 2, 3, 4]),
        one_of(&[0, 2, 3, 4]),
        star(&one_of(&[0, 1]), &one_of(&[3, 4])).unwrap(),
        one_of(&[0, 1, 2, 4]),
        SetFamily::new(n, [s(&[1, 3])]).unwrap(),
    ])
    .unwrap()
}

/// Six processes; nobody among p1..p5 trusts p6.
pub(crate) fn f_b() -> AsymmetricFamily {
    let n = 6;
    let p6 = SetFamily::new(n, [s(&[5])]).unwrap();
    let p1 = SetFamily::new(n, [s(&[0])]).unwrap();
    let two_of = |ix: &[usize]| star(&theta(n, 2, s(ix)).unwrap(), &p6).unwrap();
    let one_of = |ix: &[usize]| star(&theta(n, 1, s(ix)).unwrap(), &p6).unwrap();
    AsymmetricFamily::new(vec![
        two_of(&[1, 3, 4]),
        two_of(&[2, 3, 4]),
        two_of(&[0, 3, 4]),
        one_of(&[0, 1, 2, 4]),
        one_of(&[0, 1, 2, 3]),
        star(&p1, &theta(n, 1, s(&[1, 2, 3, 4])).unwrap()).unwrap(),
    ])
    .unwrap()
}
