use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use asymq_core::algebra::{classify, core_sets, kernels, maximal_guild, Label};
use asymq_core::config::{validate, Named, TrustSpec};
use asymq_core::fuzz::{fuzz, fuzz_one, FuzzConfig, FUZZ_MAX_STEPS};
use asymq_core::scenario::{run_scenario, Scenario};
use asymq_core::sim::ProtocolKind;
use asymq_core::Error;
use clap::{Parser, Subcommand};

/// Asymmetric Byzantine quorum systems: checks, simulations and fuzzing.
#[derive(Parser)]
#[command(name = "asymq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a trust assumption and print kernels and core sets.
    Check { spec: PathBuf },
    /// Label processes wise, naive or faulty for an actual faulty set.
    Classify {
        spec: PathBuf,
        /// Comma-separated process names.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        faulty: Vec<String>,
    },
    /// Run a scenario file and print verdicts as JSON lines.
    Run {
        scenario: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long, env = "ASYMQ_SEED")]
        seed: Option<u64>,
        /// Overrides the step bound.
        #[arg(long)]
        steps: Option<u64>,
        /// Write the trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Randomized runs checked against every invariant.
    Fuzz {
        spec: PathBuf,
        #[arg(long)]
        protocol: ProtocolKind,
        #[arg(long, default_value_t = 500)]
        runs: usize,
        #[arg(long, env = "ASYMQ_SEED", default_value_t = 0)]
        seed: u64,
        /// Also draw faulty sets outside every fail-prone system.
        #[arg(long)]
        adversarial: bool,
        #[arg(long, default_value_t = FUZZ_MAX_STEPS)]
        steps: u64,
        /// Replay a single run from its reported seed.
        #[arg(long)]
        replay: Option<u64>,
        /// With --replay, write the trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { spec } => check(&spec),
        Command::Classify { spec, faulty } => classify_cmd(&spec, &faulty),
        Command::Run { scenario, seed, steps, trace } => run_cmd(&scenario, seed, steps, trace.as_deref()),
        Command::Fuzz { spec, protocol, runs, seed, adversarial, steps, replay, trace } => {
            let cfg = FuzzConfig { protocol, runs, seed, adversarial, max_steps: steps };
            fuzz_cmd(&spec, &cfg, replay, trace.as_deref())
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn check(path: &Path) -> Result<bool, Error> {
    let spec = TrustSpec::load(path)?;
    let report = validate(&spec);
    match &report.b3 {
        Ok(()) => println!("B3: OK"),
        Err(w) => println!("B3: VIOLATED ({})", Named(&spec, w)),
    }
    let unavailable: Vec<&str> = spec
        .processes()
        .filter(|p| !report.availability[p.0])
        .map(|p| spec.name(p))
        .collect();
    if unavailable.is_empty() {
        println!("availability: OK");
    } else {
        println!("availability: VIOLATED for {}", unavailable.join(","));
    }
    match &report.asym_bqs {
        Ok(()) => println!("asymmetric-BQS: OK"),
        Err(v) => println!("asymmetric-BQS: VIOLATED ({})", Named(&spec, v)),
    }
    for p in &report.self_trust_warnings {
        println!("warning: {} lists itself as possibly faulty", spec.name(*p));
    }
    println!("quorums: {}", if report.explicit_quorums { "explicit" } else { "canonical" });
    for p in spec.processes() {
        let f = spec.fail_prone().get(p);
        let q = spec.quorums().get(p);
        println!("{}:", spec.name(p));
        println!("  fail-prone: {}", spec.format_family(f));
        println!("  quorums:    {}", spec.format_family(q));
        println!("  kernels:    {}", spec.format_family(&kernels(q)?));
        println!("  core sets:  {}", spec.format_family(&core_sets(f)));
    }
    Ok(report.b3_holds())
}

fn classify_cmd(path: &Path, faulty: &[String]) -> Result<bool, Error> {
    let spec = TrustSpec::load(path)?;
    let faulty = spec.set_of(faulty)?;
    let c = classify(spec.fail_prone(), faulty);
    for p in spec.processes() {
        let label = match c.label(p) {
            Label::Faulty => "Faulty",
            Label::Naive => "Naive",
            Label::Wise => "Wise",
        };
        println!("{}: {label}", spec.name(p));
    }
    match maximal_guild(spec.quorums(), spec.fail_prone(), faulty) {
        Some(g) => println!("guild: {}", spec.format_set(g)),
        None => println!("guild: none"),
    }
    Ok(true)
}

fn write_trace(path: &Path, jsonl: &str) -> Result<(), Error> {
    fs::write(path, jsonl).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn run_cmd(path: &Path, seed: Option<u64>, steps: Option<u64>, trace: Option<&Path>) -> Result<bool, Error> {
    let sc = Scenario::load(path)?;
    let out = run_scenario(&sc, seed, steps)?;
    if let Some(t) = trace {
        write_trace(t, &out.trace.to_jsonl())?;
    }
    for v in out.verdicts(&sc) {
        println!("{v}");
    }
    eprintln!("{:<26} {:<10} detail", "item", "status");
    for name in &out.report.checked {
        let bad: Vec<_> = out.report.violations().filter(|f| f.check == *name).collect();
        let status = if bad.is_empty() { "ok" } else { "VIOLATED" };
        let detail = bad.first().map_or(String::new(), |f| f.detail.clone());
        eprintln!("{:<26} {:<10} {}", name, status, detail);
    }
    for f in out.report.findings.iter().filter(|f| !out.report.violations().any(|v| std::ptr::eq(v, *f))) {
        eprintln!("{:<26} {:<10} {}", f.check, "observed", f.detail);
    }
    for e in &out.expectations {
        let item = match &e.subject {
            Some(s) => format!("expect {} {}", e.name, s),
            None => format!("expect {}", e.name),
        };
        let status = if e.ok() { "ok" } else { "MISMATCH" };
        eprintln!("{:<26} {:<10} want {} got {}", item, status, e.want, e.got);
    }
    if out.trace.truncated {
        let status = if out.truncation_expected { "expected" } else { "TRUNCATED" };
        eprintln!("{:<26} {:<10} step bound reached after {} steps", "truncation", status, out.trace.steps);
    }
    eprintln!("{:<26} {:<10} {} steps", "result", if out.passed() { "PASS" } else { "FAIL" }, out.trace.steps);
    Ok(out.passed())
}

fn fuzz_cmd(path: &Path, cfg: &FuzzConfig, replay: Option<u64>, trace: Option<&Path>) -> Result<bool, Error> {
    let spec = TrustSpec::load(path)?;
    if let Some(seed) = replay {
        let (setup, tr, report) = fuzz_one(&spec, cfg, seed)?;
        if let Some(t) = trace {
            write_trace(t, &tr.to_jsonl())?;
        }
        println!(
            "replay seed={seed} faulty={} steps={} truncated={}",
            spec.format_set(setup.faulty),
            tr.steps,
            tr.truncated
        );
        for f in &report.findings {
            println!("{:?} {}: {}", f.severity, f.check, f.detail);
        }
        return Ok(report.is_clean());
    }
    let summary = fuzz(&spec, cfg)?;
    for r in summary.failing() {
        for f in &r.violations {
            println!(
                "violation run={} seed={} faulty={} {}: {}",
                r.index,
                r.seed,
                spec.format_set(r.faulty),
                f.check,
                f.detail
            );
        }
        println!(
            "  reproduce: asymq fuzz {} --protocol {} --steps {}{} --replay {}",
            path.display(),
            cfg.protocol.name(),
            cfg.max_steps,
            if cfg.adversarial { " --adversarial" } else { "" },
            r.seed
        );
    }
    for r in summary.runs.iter().filter(|r| r.truncated) {
        println!("truncated run={} seed={} faulty={} steps={}", r.index, r.seed, spec.format_set(r.faulty), r.steps);
    }
    println!(
        "protocol={} runs={} seed={} adversarial={} violations={} failing_runs={} truncated={}",
        cfg.protocol.name(),
        summary.runs.len(),
        cfg.seed,
        cfg.adversarial,
        summary.violation_count(),
        summary.failing().count(),
        summary.truncated_count()
    );
    Ok(summary.violation_count() == 0)
}
