//! One test per acceptance criterion. Each prints a single PASS/FAIL line.
//!
//! Criteria listed in `EXPECTED_FAIL` are known not to hold on the shipped
//! inputs; their tests pin the observed counter-facts so the verdict cannot
//! silently change in either direction. Run with `--nocapture` to see the
//! lines, or `--test-threads=1` to keep them ordered.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use asymq_core::algebra::{
    canonical_asymmetric, canonical_quorums, check_b3, core_sets, is_asym_bqs, kernels, maximal_guild, star, theta,
    threshold_asym, threshold_kernel_size, threshold_quorum_size, AsymmetricFamily, ProcessId, ProcessSet, SetFamily,
};
use asymq_core::config::TrustSpec;
use asymq_core::fuzz::{fuzz, fuzz_one, FuzzConfig};
use asymq_core::scenario::{run_scenario, Scenario};
use asymq_core::sim::{Event, Message, ProtocolKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value as Json;

/// Criteria whose checks do not all hold; see the README.
const EXPECTED_FAIL: &[u32] = &[2, 9];

const ONE_SECOND: Duration = Duration::from_secs(1);
const ONE_MINUTE: Duration = Duration::from_secs(60);
const FIVE_MINUTES: Duration = Duration::from_secs(300);

struct Criterion {
    id: u32,
    title: &'static str,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new(id: u32, title: &'static str) -> Self {
        Criterion { id, title, checks: Vec::new() }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn within(&mut self, start: Instant, limit: Duration) {
        let took = start.elapsed();
        self.check(format!("elapsed {took:.2?} < {limit:?}"), took < limit);
    }

    fn finish(self) {
        let pass = self.checks.iter().all(|(_, ok)| *ok);
        let failed: Vec<&str> = self.checks.iter().filter(|(_, ok)| !ok).map(|(w, _)| w.as_str()).collect();
        let verdict = if pass { "PASS" } else { "FAIL" };
        if failed.is_empty() {
            println!("{verdict} criterion {}: {} ({} checks)", self.id, self.title, self.checks.len());
        } else {
            println!("{verdict} criterion {}: {} [failed: {}]", self.id, self.title, failed.join("; "));
        }
        let expected_pass = !EXPECTED_FAIL.contains(&self.id);
        assert_eq!(pass, expected_pass, "criterion {} verdict changed: {:?}", self.id, self.checks);
    }
}

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn asymq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asymq"))
        .args(args)
        .env_remove("ASYMQ_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn temp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("asymq-acceptance-{}-{name}", std::process::id()))
}

fn s(n: &[usize]) -> ProcessSet {
    ProcessSet::from_indices(n.iter().map(|i| i - 1))
}

fn fam(n: usize, sets: &[&[usize]]) -> SetFamily {
    SetFamily::new(n, sets.iter().map(|x| s(x))).unwrap()
}

fn family_of(n: usize, k: usize, of: &[usize]) -> SetFamily {
    theta(n, k, s(of)).unwrap()
}

fn spec(name: &str) -> TrustSpec {
    TrustSpec::load(&data(&format!("trust/{name}.json"))).unwrap()
}

fn verdict_lines(o: &Output) -> Vec<Json> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn delivered(lines: &[Json], process: &str) -> Json {
    lines
        .iter()
        .find(|v| v["verdict"] == "outcome" && v["process"] == process)
        .map(|v| v["delivered"].clone())
        .unwrap_or(Json::String("missing".into()))
}

#[test]
fn criterion_01_fa_checks() {
    let mut c = Criterion::new(1, "F_A parses, B3 holds, F={p2,p4} classifies p1 naive and p3,p5 wise");
    let start = Instant::now();
    let fa = spec("fa");
    let expected = [
        family_of(5, 1, &[2, 3, 4, 5]),
        family_of(5, 1, &[1, 3, 4, 5]),
        star(&family_of(5, 1, &[1, 2]), &family_of(5, 1, &[4, 5])).unwrap(),
        family_of(5, 1, &[1, 2, 3, 5]),
        fam(5, &[&[2, 4]]),
    ];
    for (i, want) in expected.iter().enumerate() {
        c.check(format!("F_{} as listed", i + 1), fa.fail_prone().get(ProcessId(i)) == want);
    }
    c.check(
        "F_3 = {{p1,p4},{p1,p5},{p2,p4},{p2,p5}}",
        fa.fail_prone().get(ProcessId(2)) == &fam(5, &[&[1, 4], &[1, 5], &[2, 4], &[2, 5]]),
    );
    let out = asymq(&["check", data("trust/fa.json").to_str().unwrap()]);
    c.check("check prints B3: OK", stdout(&out).lines().any(|l| l == "B3: OK"));
    c.check("check exits 0", out.status.code() == Some(0));
    let out = asymq(&["classify", data("trust/fa.json").to_str().unwrap(), "--faulty", "p2,p4"]);
    let text = stdout(&out);
    for line in ["p1: Naive", "p2: Faulty", "p3: Wise", "p4: Faulty", "p5: Wise"] {
        c.check(format!("classify prints {line}"), text.lines().any(|l| l == line));
    }
    c.within(start, ONE_SECOND);
    c.finish();
}

#[test]
fn criterion_02_fb_checks() {
    let mut c = Criterion::new(2, "F_B: B3 holds, K_1..K_3 as listed, guilds for F={p4,p5} and F={p1,p5}");
    let start = Instant::now();
    let fb = spec("fb");
    let b3 = check_b3(fb.fail_prone());
    c.check(
        match &b3 {
            Ok(()) => "B3 holds".to_string(),
            Err(w) => format!("B3 holds (violated: {w})"),
        },
        b3.is_ok(),
    );
    let listed = [fam(6, &[&[1], &[3]]), fam(6, &[&[1], &[2]]), fam(6, &[&[2], &[3]])];
    for (i, want) in listed.iter().enumerate() {
        let got = kernels(fb.quorums().get(ProcessId(i))).unwrap();
        c.check(format!("K_{} = {want} (computed {got})", i + 1), &got == want);
        c.check(format!("K_{} contains every listed kernel", i + 1), want.iter().all(|k| got.contains_set(*k)));
    }
    let guild = maximal_guild(fb.quorums(), fb.fail_prone(), s(&[4, 5]));
    c.check("guild {p1,p2,p3} for F={p4,p5}", guild == Some(s(&[1, 2, 3])));
    c.check("no guild for F={p1,p5}", maximal_guild(fb.quorums(), fb.fail_prone(), s(&[1, 5])).is_none());
    let out = asymq(&["classify", data("trust/fb.json").to_str().unwrap(), "--faulty", "p1,p5"]);
    let text = stdout(&out);
    for line in ["p2: Naive", "p3: Wise", "p4: Naive", "p6: Wise", "guild: none"] {
        c.check(format!("classify prints {line}"), text.lines().any(|l| l == line));
    }
    c.within(start, ONE_SECOND);

    // Pinned counter-facts behind the expected failure.
    let w = b3.expect_err("B3 fails on the listed F_B");
    assert_eq!((w.i, w.j, w.f_i, w.f_j, w.f_ij), (ProcessId(0), ProcessId(5), s(&[2, 4, 6]), s(&[1, 3]), s(&[5])));
    assert_eq!(kernels(fb.quorums().get(ProcessId(0))).unwrap(), fam(6, &[&[1], &[3], &[2, 4, 5]]));
    assert_eq!(kernels(fb.quorums().get(ProcessId(1))).unwrap(), fam(6, &[&[1], &[2], &[3, 4, 5]]));
    assert_eq!(kernels(fb.quorums().get(ProcessId(2))).unwrap(), fam(6, &[&[2], &[3], &[1, 4, 5]]));
    c.finish();
}

fn random_system(rng: &mut ChaCha8Rng) -> AsymmetricFamily {
    let n = rng.gen_range(2..=6);
    let per = (0..n)
        .map(|_| {
            let density = rng.gen_range(0.15..0.5);
            let sets: Vec<ProcessSet> = (0..rng.gen_range(1..=3))
                .map(|_| (0..n).filter(|_| rng.gen_bool(density)).map(ProcessId).collect())
                .collect();
            SetFamily::new(n, sets).unwrap()
        })
        .collect();
    AsymmetricFamily::new(per).unwrap()
}

#[test]
fn criterion_03_theorem_one() {
    let mut c = Criterion::new(3, "B3 iff canonical system is an asymmetric BQS, witness breaks consistency");
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut total, mut agree, mut violations, mut witnessed) = (0, 0, 0, 0);
    for _ in 0..2000 {
        let ff = random_system(&mut rng);
        let n = ff.universe_size();
        let b3 = check_b3(&ff);
        let bqs = is_asym_bqs(&canonical_asymmetric(&ff), &ff).unwrap();
        total += 1;
        agree += usize::from(b3.is_ok() == bqs.is_ok());
        if let Err(w) = b3 {
            violations += 1;
            let all = ProcessSet::full(n);
            let meet = all.difference(w.f_i).intersection(all.difference(w.f_j));
            witnessed += usize::from(meet.is_subset(w.f_ij));
        }
    }
    c.check(format!("{total} systems >= 1000"), total >= 1000);
    c.check(format!("agreement {agree}/{total}"), agree == total);
    c.check(format!("witnesses {witnessed}/{violations}"), witnessed == violations && violations > 0);
    c.within(start, ONE_MINUTE);
    c.finish();
}

fn minimal_brute(n: usize, keep: impl Fn(ProcessSet) -> bool) -> SetFamily {
    let cands: Vec<ProcessSet> = (0u64..1 << n).map(ProcessSet::from_bits).filter(|x| keep(*x)).collect();
    SetFamily::new_minimal(n, cands).unwrap()
}

#[test]
fn criterion_04_kernel_core_oracles() {
    let mut c = Criterion::new(4, "kernels and core sets equal 2^n enumeration for n <= 8");
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut total, mut k_ok, mut c_ok, mut dual_ok) = (0, 0, 0, 0);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=8);
        let sets: Vec<ProcessSet> = (0..rng.gen_range(1..=6))
            .map(|_| ProcessSet::from_bits(rng.gen_range(0..1u64 << n)))
            .collect();
        let f = SetFamily::new(n, sets.iter().copied()).unwrap();
        let q = SetFamily::new_minimal(n, sets).unwrap();
        total += 1;
        let kb = minimal_brute(n, |x| q.iter().all(|qs| qs.intersects(x)));
        let cb = minimal_brute(n, |x| !f.iter().any(|fs| x.is_subset(*fs)));
        k_ok += usize::from(kernels(&q).unwrap() == kb);
        c_ok += usize::from(core_sets(&f) == cb);
        dual_ok += usize::from(kernels(&canonical_quorums(&f)).unwrap() == core_sets(&f));
    }
    c.check(format!("kernels {k_ok}/{total}"), k_ok == total);
    c.check(format!("core sets {c_ok}/{total}"), c_ok == total);
    c.check(format!("kernels(canonical) = core sets {dual_ok}/{total}"), dual_ok == total);
    c.within(start, ONE_MINUTE);
    c.finish();
}

#[test]
fn criterion_05_threshold_reduction() {
    let mut c = Criterion::new(5, "threshold quorum and kernel cardinalities");
    for (n, f, q, k) in [(4, 1, 3, 2), (7, 2, 5, 3)] {
        let (_, qq) = threshold_asym(n, f).unwrap();
        let quorums = qq.get(ProcessId(0));
        let ks = kernels(quorums).unwrap();
        c.check(format!("n={n} f={f} quorum size {q}"), quorums.iter().all(|x| x.len() == q));
        c.check(format!("n={n} f={f} kernel size {k}"), ks.iter().all(|x| x.len() == k));
        c.check(format!("n={n} f={f} formulas"), threshold_quorum_size(n, f) == q && threshold_kernel_size(n, f) == k);
    }
    c.finish();
}

fn golden_run(c: &mut Criterion, name: &str) -> Vec<Json> {
    let trace = temp(&format!("{name}.jsonl"));
    let out = asymq(&["run", data(&format!("scenarios/{name}.json")).to_str().unwrap(), "--trace", trace.to_str().unwrap()]);
    c.check(format!("{name} exits 0"), out.status.code() == Some(0));
    let got = std::fs::read(&trace).unwrap_or_default();
    let want = std::fs::read(data(&format!("golden/{name}.trace.jsonl"))).unwrap();
    c.check(format!("{name} trace byte-identical to golden"), got == want);
    let _ = std::fs::remove_file(trace);
    verdict_lines(&out)
}

#[test]
fn criterion_06_golden_consistent_broadcast() {
    let mut c = Criterion::new(6, "consistent broadcast golden trace: p1 x, p6 u, p2 and p3 nothing");
    let start = Instant::now();
    let lines = golden_run(&mut c, "cb_fb_equivocation");
    for (p, want) in [("p1", Json::from("x")), ("p6", Json::from("u")), ("p2", Json::Null), ("p3", Json::Null)] {
        c.check(format!("{p} delivers {want}"), delivered(&lines, p) == want);
    }
    c.within(start, ONE_SECOND);
    c.finish();
}

#[test]
fn criterion_07_golden_reliable_broadcast() {
    let mut c = Criterion::new(7, "reliable broadcast golden trace: READY(x) via kernels {p1} then {p2}");
    let start = Instant::now();
    let lines = golden_run(&mut c, "rb_fb_equivocation");
    for (p, want) in [("p1", "x"), ("p2", "x"), ("p3", "x")] {
        c.check(format!("{p} delivers {want}"), delivered(&lines, p) == want);
    }
    c.check("p6 delivers nothing", delivered(&lines, "p6") == Json::Null);

    let sc = Scenario::load(&data("scenarios/rb_fb_equivocation.json")).unwrap();
    let trace = run_scenario(&sc, None, None).unwrap().trace;
    // The READY that made p2 and p3 chime in: the only READY each had received when sending its own.
    let trigger = |me: usize| -> Option<(usize, String)> {
        let mut seen = Vec::new();
        for r in &trace.records {
            match &r.event {
                Event::Deliver(e) if e.to.0 == me => {
                    if let Message::Ready { m } = &e.msg {
                        seen.push((e.from.0 + 1, m.to_string()));
                    }
                }
                Event::Send(e) if e.from.0 == me && matches!(e.msg, Message::Ready { .. }) => {
                    return (seen.len() == 1).then(|| seen[0].clone());
                }
                _ => {}
            }
        }
        None
    };
    c.check("p2 sends READY after READY(x) from p1 alone", trigger(1) == Some((1, "x".into())));
    c.check("p3 sends READY after READY(x) from p2 alone", trigger(2) == Some((2, "x".into())));
    let fb = spec("fb");
    c.check("{p1} is a kernel for p2", kernels(fb.quorums().get(ProcessId(1))).unwrap().contains_set(s(&[1])));
    c.check("{p2} is a kernel for p3", kernels(fb.quorums().get(ProcessId(2))).unwrap().contains_set(s(&[2])));
    c.within(start, ONE_SECOND);
    c.finish();
}

#[test]
fn criterion_08_register_counterexamples() {
    let mut c = Criterion::new(8, "naive endpoints read x instead of u and are flagged, wise endpoints are safe");
    for name in ["reg_naive_writer", "reg_naive_reader"] {
        let lines = golden_run(&mut c, name);
        let read = lines.iter().find(|v| v["verdict"] == "read" && v["id"] == "r1").map(|v| v["value"].clone());
        c.check(format!("{name} reads x"), read == Some(Json::from("x")));
        let flagged = lines
            .iter()
            .any(|v| v["verdict"] == "expect" && v["name"] == "safety_violation" && v["got"] == true);
        c.check(format!("{name} safety flagged"), flagged);
    }
    for name in ["reg_wise_writer", "reg_wise_reader", "dw_fa_wise"] {
        let sc = Scenario::load(&data(&format!("scenarios/{name}.json"))).unwrap();
        let bad = (0..100)
            .filter(|seed| {
                let out = run_scenario(&sc, Some(*seed), None).unwrap();
                out.report.flagged("safety") || out.report.flagged("unscoped-safety") || !out.passed()
            })
            .count();
        c.check(format!("{name} safe on 100 seeds ({bad} bad)"), bad == 0);
    }
    c.finish();
}

#[test]
fn criterion_09_fuzz_suites() {
    let mut c = Criterion::new(9, "500 fuzz runs per protocol per spec without invariant violations");
    let start = Instant::now();
    let mut pinned = Vec::new();
    for name in ["fa", "fb", "threshold_n4f1"] {
        let spec = spec(name);
        for kind in ProtocolKind::ALL {
            for adversarial in [false, true] {
                let mut cfg = FuzzConfig::new(kind, 500, 2024);
                cfg.adversarial = adversarial;
                let summary = fuzz(&spec, &cfg).unwrap();
                let mode = if adversarial { "adversarial F" } else { "tolerated F" };
                let checks: Vec<&str> = summary.failing().flat_map(|r| r.violations.iter().map(|f| f.check)).collect();
                c.check(
                    format!(
                        "{name} {} {mode}: {} violations in {} runs ({:?})",
                        kind.name(),
                        summary.violation_count(),
                        summary.failing().count(),
                        checks.iter().collect::<std::collections::BTreeSet<_>>()
                    ),
                    summary.violation_count() == 0,
                );
                if summary.violation_count() > 0 {
                    pinned.push((name, kind, checks, summary));
                }
            }
        }
    }
    c.within(start, FIVE_MINUTES);

    // Violations only hit reliable broadcast on the two paper specs: integrity
    // failures need an execution without a guild, consistency failures need
    // F_B, whose B3 condition fails.
    for (name, kind, _, summary) in &pinned {
        assert_eq!(*kind, ProtocolKind::ReliableBcast);
        let spec = spec(name);
        for r in summary.failing() {
            for f in &r.violations {
                match f.check {
                    "integrity" => assert!(maximal_guild(spec.quorums(), spec.fail_prone(), r.faulty).is_none()),
                    "consistency" => assert!(*name == "fb" && check_b3(spec.fail_prone()).is_err()),
                    other => panic!("unexpected {other} violation in {name}: {}", f.detail),
                }
            }
        }
    }
    c.finish();
}

#[test]
fn criterion_10_determinism() {
    let mut c = Criterion::new(10, "golden runs and reported fuzz violations replay byte-identically");
    for name in ["cb_fb_equivocation", "rb_fb_equivocation", "reg_naive_writer", "reg_naive_reader"] {
        let scenario = data(&format!("scenarios/{name}.json"));
        let traces: Vec<Vec<u8>> = (0..2)
            .map(|k| {
                let path = temp(&format!("det-{name}-{k}.jsonl"));
                asymq(&["run", scenario.to_str().unwrap(), "--trace", path.to_str().unwrap()]);
                let bytes = std::fs::read(&path).unwrap_or_default();
                let _ = std::fs::remove_file(path);
                bytes
            })
            .collect();
        c.check(format!("{name} reruns identically"), !traces[0].is_empty() && traces[0] == traces[1]);
    }

    let fa = data("trust/fa.json");
    let cfg = FuzzConfig::new(ProtocolKind::ReliableBcast, 200, 0);
    let summary = fuzz(&spec("fa"), &cfg).unwrap();
    let failing: Vec<u64> = summary.failing().map(|r| r.seed).take(3).collect();
    c.check(format!("campaign reports violations to replay ({})", failing.len()), !failing.is_empty());
    for seed in failing {
        let seed_arg = seed.to_string();
        let traces: Vec<Vec<u8>> = (0..2)
            .map(|k| {
                let path = temp(&format!("replay-{seed}-{k}.jsonl"));
                let out = asymq(&[
                    "fuzz",
                    fa.to_str().unwrap(),
                    "--protocol",
                    "reliable-bcast",
                    "--replay",
                    &seed_arg,
                    "--trace",
                    path.to_str().unwrap(),
                ]);
                assert_eq!(out.status.code(), Some(1));
                let bytes = std::fs::read(&path).unwrap_or_default();
                let _ = std::fs::remove_file(path);
                bytes
            })
            .collect();
        let (_, lib_trace, report) = fuzz_one(&spec("fa"), &cfg, seed).unwrap();
        c.check(
            format!("seed {seed} replays identically"),
            !traces[0].is_empty() && traces[0] == traces[1] && traces[0] == lib_trace.to_jsonl().into_bytes(),
        );
        c.check(format!("seed {seed} reproduces its violation"), !report.is_clean());
    }
    c.finish();
}
