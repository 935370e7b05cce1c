//! Brute-force oracles and randomized properties for the quorum algebra.

use asymq_core::algebra::{
    canonical_asymmetric, canonical_quorums, check_b3, check_q3, classify, core_sets, dominates, is_asym_bqs,
    is_bqs, is_guild, kernels, maximal_guild, normalize_antichain, star, theta, threshold_asym,
    threshold_kernel_size, threshold_quorum_size, AsymBqsViolation, AsymmetricFamily, Label, ProcessId, ProcessSet,
    SetFamily,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn subsets(n: usize) -> impl Iterator<Item = ProcessSet> {
    (0u64..1 << n).map(ProcessSet::from_bits)
}

fn minimal(mut sets: Vec<ProcessSet>) -> Vec<u64> {
    sets.sort_by_key(|s| s.len());
    let mut out: Vec<ProcessSet> = Vec::new();
    for s in sets {
        if !out.iter().any(|m| m.is_subset(s)) {
            out.push(s);
        }
    }
    let mut bits: Vec<u64> = out.into_iter().map(|s| s.bits()).collect();
    bits.sort_unstable();
    bits
}

fn bits_of(f: &SetFamily) -> Vec<u64> {
    let mut v: Vec<u64> = f.iter().map(|s| s.bits()).collect();
    v.sort_unstable();
    v
}

fn kernels_brute(q: &SetFamily) -> Vec<u64> {
    let n = q.universe_size();
    minimal(subsets(n).filter(|s| q.iter().all(|qs| qs.intersects(*s))).collect())
}

fn cores_brute(f: &SetFamily) -> Vec<u64> {
    let n = f.universe_size();
    minimal(subsets(n).filter(|s| !f.iter().any(|fs| s.is_subset(*fs))).collect())
}

fn in_closure(f: &SetFamily, x: ProcessSet) -> bool {
    f.iter().any(|s| x.is_subset(*s))
}

fn b3_brute(ff: &AsymmetricFamily) -> bool {
    let n = ff.universe_size();
    let all = ProcessSet::full(n);
    for (_, fi) in ff.iter() {
        for (_, fj) in ff.iter() {
            for x in subsets(n).filter(|x| in_closure(fi, *x) && in_closure(fj, *x)) {
                for a in fi {
                    for b in fj {
                        if a.union(*b).union(x) == all {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

fn q3_brute(f: &SetFamily) -> bool {
    let all = ProcessSet::full(f.universe_size());
    !f.iter().any(|a| f.iter().any(|b| f.iter().any(|c| a.union(*b).union(*c) == all)))
}

fn family(n: usize, masks: &[u64]) -> SetFamily {
    SetFamily::new(n, masks.iter().map(|m| ProcessSet::from_bits(m & ((1 << n) - 1)))).unwrap()
}

fn random_asym(rng: &mut ChaCha8Rng, n: usize) -> AsymmetricFamily {
    let per = (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=3);
            let density = rng.gen_range(0.15..0.5);
            let sets: Vec<ProcessSet> = (0..k)
                .map(|_| (0..n).filter(|_| rng.gen_bool(density)).map(ProcessId).collect())
                .collect();
            SetFamily::new(n, sets).unwrap()
        })
        .collect();
    AsymmetricFamily::new(per).unwrap()
}

fn asym_strategy(max_n: usize) -> impl Strategy<Value = AsymmetricFamily> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(0u64..(1 << n), 1..=3), n)
            .prop_map(move |per| AsymmetricFamily::new(per.iter().map(|m| family(n, m)).collect()).unwrap())
    })
}

fn family_strategy(max_n: usize) -> impl Strategy<Value = SetFamily> {
    (1..=max_n).prop_flat_map(|n| prop::collection::vec(0u64..(1 << n), 1..=5).prop_map(move |m| family(n, &m)))
}

#[test]
fn theorem_one_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb3);
    let (mut holds, mut fails) = (0, 0);
    for _ in 0..1500 {
        let n = rng.gen_range(2..=6);
        let ff = random_asym(&mut rng, n);
        let qq = canonical_asymmetric(&ff);
        let b3 = check_b3(&ff);
        let bqs = is_asym_bqs(&qq, &ff).unwrap();
        assert_eq!(b3.is_ok(), bqs.is_ok(), "{ff:?}");
        assert_eq!(b3.is_ok(), b3_brute(&ff));
        match b3 {
            Ok(()) => holds += 1,
            Err(w) => {
                fails += 1;
                let all = ProcessSet::full(n);
                let (q_i, q_j) = (all.difference(w.f_i), all.difference(w.f_j));
                assert!(ff.get(w.i).contains_set(w.f_i) && ff.get(w.j).contains_set(w.f_j));
                assert!(in_closure(ff.get(w.i), w.f_ij) && in_closure(ff.get(w.j), w.f_ij));
                assert!(q_i.intersection(q_j).is_subset(w.f_ij), "witness does not break consistency");
                assert!(matches!(bqs, Err(AsymBqsViolation::Consistency { .. })));
            }
        }
    }
    assert!(holds > 100 && fails > 100, "generator is lopsided: {holds} hold, {fails} fail");
}

#[test]
fn kernels_and_cores_match_enumeration_up_to_eight() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b);
    for _ in 0..600 {
        let n = rng.gen_range(1..=8);
        let k = rng.gen_range(1..=6);
        let masks: Vec<u64> = (0..k).map(|_| rng.gen_range(0..1u64 << n)).collect();
        let f = family(n, &masks);
        assert_eq!(bits_of(&core_sets(&f)), cores_brute(&f), "{f:?}");
        let q = SetFamily::new_minimal(n, masks.iter().map(|m| ProcessSet::from_bits(*m))).unwrap();
        assert_eq!(bits_of(&kernels(&q).unwrap()), kernels_brute(&q), "{q:?}");
        assert_eq!(bits_of(&kernels(&canonical_quorums(&f)).unwrap()), bits_of(&core_sets(&f)));
    }
}

#[test]
fn threshold_sizes_match_formulas() {
    for (n, f) in [(4, 1), (7, 2), (5, 1), (10, 3), (3, 0)] {
        let (ff, qq) = threshold_asym(n, f).unwrap();
        let q = threshold_quorum_size(n, f);
        let k = threshold_kernel_size(n, f);
        assert_eq!(q, (n + f + 1).div_ceil(2));
        assert_eq!(k, (n - f + 1).div_euclid(2));
        assert!(qq.get(ProcessId(0)).iter().all(|s| s.len() == q));
        assert!(kernels(qq.get(ProcessId(0))).unwrap().iter().all(|s| s.len() == k));
        assert!(ff.get(ProcessId(0)).iter().all(|s| s.len() == f));
        assert_eq!(check_b3(&ff).is_ok(), n > 3 * f);
        assert_eq!(is_asym_bqs(&qq, &ff).unwrap().is_ok(), n > 3 * f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn check_b3_agrees_with_enumeration(ff in asym_strategy(5)) {
        prop_assert_eq!(check_b3(&ff).is_ok(), b3_brute(&ff));
    }

    #[test]
    fn q3_is_the_symmetric_special_case(f in family_strategy(6)) {
        prop_assert_eq!(check_q3(&f), q3_brute(&f));
        prop_assert_eq!(is_bqs(&canonical_quorums(&f), &f).unwrap(), check_q3(&f));
        let n = f.universe_size();
        let ff = AsymmetricFamily::new(vec![f.clone(); n]).unwrap();
        prop_assert_eq!(check_b3(&ff).is_ok(), check_q3(&f));
    }

    #[test]
    fn normalization_is_an_idempotent_antichain(n in 1usize..=7, masks in prop::collection::vec(0u64..128, 0..8)) {
        let f = family(n, &masks);
        let sets = f.sets();
        for a in sets {
            for b in sets {
                prop_assert!(a == b || !a.is_subset(*b));
            }
        }
        for m in &masks {
            prop_assert!(f.closure_contains(ProcessSet::from_bits(m & ((1 << n) - 1))));
        }
        let again = normalize_antichain(n, sets.iter().copied()).unwrap();
        prop_assert_eq!(&again, &f);
    }

    #[test]
    fn canonical_quorums_are_complements(f in family_strategy(6)) {
        let q = canonical_quorums(&f);
        let all = f.universe();
        prop_assert_eq!(q.len(), f.len());
        for s in &f {
            prop_assert!(q.contains_set(all.difference(*s)));
        }
    }

    #[test]
    fn kernels_hit_every_quorum_minimally(f in family_strategy(6)) {
        let q = canonical_quorums(&f);
        if q.iter().all(|s| !s.is_empty()) {
            let ks = kernels(&q).unwrap();
            for k in &ks {
                prop_assert!(q.iter().all(|s| s.intersects(*k)));
                for p in k.iter() {
                    let mut smaller = *k;
                    smaller.remove(p);
                    prop_assert!(q.iter().any(|s| !s.intersects(smaller)));
                }
            }
        }
    }

    #[test]
    fn theta_has_exact_cardinality(n in 1usize..=7, k in 0usize..=7, base in 0u64..128) {
        let base = ProcessSet::from_bits(base & ((1 << n) - 1));
        match theta(n, k, base) {
            Ok(t) => {
                prop_assert!(k <= base.len());
                prop_assert!(t.iter().all(|s| s.len() == k && s.is_subset(base)));
            }
            Err(_) => prop_assert!(k > base.len()),
        }
    }

    #[test]
    fn star_dominates_both_operands(a in family_strategy(5), b_masks in prop::collection::vec(0u64..32, 1..4)) {
        let n = a.universe_size();
        let b = family(n, &b_masks);
        let s = star(&a, &b).unwrap();
        prop_assert!(dominates(&s, &a));
        prop_assert!(dominates(&s, &b));
        for x in &a {
            for y in &b {
                prop_assert!(s.closure_contains(x.union(*y)));
            }
        }
    }

    #[test]
    fn classification_partitions_processes(ff in asym_strategy(6), faulty in 0u64..64) {
        let n = ff.universe_size();
        let faulty = ProcessSet::from_bits(faulty & ((1 << n) - 1));
        let c = classify(&ff, faulty);
        for p in (0..n).map(ProcessId) {
            let expected = if faulty.contains(p) {
                Label::Faulty
            } else if in_closure(ff.get(p), faulty) {
                Label::Wise
            } else {
                Label::Naive
            };
            prop_assert_eq!(c.label(p), expected);
        }
    }

    #[test]
    fn maximal_guild_is_the_union_of_all_guilds(ff in asym_strategy(6), faulty in 0u64..64) {
        let n = ff.universe_size();
        let faulty = ProcessSet::from_bits(faulty & ((1 << n) - 1));
        let qq = canonical_asymmetric(&ff);
        let union = subsets(n)
            .filter(|g| is_guild(*g, &qq, &ff, faulty))
            .fold(ProcessSet::EMPTY, ProcessSet::union);
        let got = maximal_guild(&qq, &ff, faulty);
        prop_assert_eq!(got, (!union.is_empty()).then_some(union));
        if let Some(g) = got {
            prop_assert!(is_guild(g, &qq, &ff, faulty));
        }
    }
}
