//! End-to-end acceptance suite. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits nonzero on any FAIL.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use flowround::policy::policy_for;
use flowround::verify::{check_all, expectation_oracle, shadow_tree_suite, statistical_expectation};
use flowround::{run, Algorithm, FlowState, Mode, Rational, RunOptions};
use flowround_cli::commands::{round_instance, verify_texts, RoundConfig};
use flowround_cli::{generate, generate_flow, GenParams};

const MODES: [Mode; 2] = [Mode::Costed, Mode::Randomized];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// The mixed sparse/dense validity corpus: n <= 50, m <= 200.
fn corpus_params(i: u64) -> GenParams {
    let n = 3 + (i as usize % 48);
    let dense_m = (n * (n - 1) / 2).clamp(n, 200);
    let m = if i.is_multiple_of(2) { dense_m } else { (n + (i as usize * 7) % (n + 1)).min(200) };
    GenParams { n, m, cycles: 1 + (i as usize % (2 * n)), seed: i, costed: true }
}

fn validity_sweep() -> Outcome {
    let mut runs = 0;
    for i in 0..1000 {
        let st = generate(&corpus_params(i)).map_err(|e| e.to_string())?;
        for algo in Algorithm::ALL {
            for mode in MODES {
                let mut policy = policy_for(mode, i);
                let (out, _) = run(st.clone(), policy.as_mut(), algo, &RunOptions::default())
                    .map_err(|e| format!("instance {i} {algo}: {e}"))?;
                let report = check_all(&st, &out, mode).map_err(|e| e.to_string())?;
                ensure(report.passed(), || format!("instance {i} {algo} {mode:?}: {report}"))?;
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} runs valid"))
}

/// Small instances whose fractional part has at most 12 edges.
fn oracle_corpus() -> Vec<FlowState> {
    let mut out = Vec::new();
    let mut seed = 10_000;
    while out.len() < 200 {
        seed += 1;
        let n = 3 + (seed as usize % 7);
        let p = GenParams { n, m: n + (seed as usize % 6), cycles: 2 + (seed as usize % 6), seed, costed: false };
        let st = generate(&p).expect("feasible");
        if st.fractional_edges().len() <= 12 {
            out.push(st);
        }
    }
    out
}

fn exact_expectation() -> Outcome {
    let mut leaves = 0;
    for (i, st) in oracle_corpus().iter().enumerate() {
        for algo in Algorithm::ALL {
            let r = expectation_oracle(st, algo, &RunOptions::default(), 1 << 13)
                .map_err(|e| format!("instance {i} {algo}: {e}"))?;
            ensure(r.probability_mass == Some(Rational::one()), || format!("instance {i} {algo}: mass"))?;
            ensure(r.passed(), || format!("instance {i} {algo}:\n{r}"))?;
            leaves += r.branch_count;
        }
    }
    Ok(format!("800 oracles exact, {leaves} leaves"))
}

fn statistical() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..10 {
        let st = generate(&GenParams { n: 12 + i, m: 30 + 3 * i, cycles: 8, seed: 500 + i as u64, costed: false })
            .map_err(|e| e.to_string())?;
        let r = statistical_expectation(&st, Algorithm::Mlogn2m, &RunOptions::default(), 10_000, 900 + i as u64)
            .map_err(|e| e.to_string())?;
        ensure(r.passed(), || format!("instance {i}:\n{r}"))?;
        for e in &r.edges {
            worst = worst.max((&e.mean - &e.original).abs().to_f64());
        }
    }
    Ok(format!("10 x 10000 trials, worst |mean - f0| = {worst:.5} <= 0.025"))
}

fn differential() -> Outcome {
    let mut compared = 0;
    for seed in 0..4 {
        compared += shadow_tree_suite(25_000, seed).map_err(|d| d.to_string())?;
    }
    Ok(format!("100000 ops, {compared} results agree"))
}

fn cluster_invariants() -> Outcome {
    let opts = RunOptions { audit_clusters: true, ..RunOptions::default() };
    let mut steps = 0;
    for i in 0..1000 {
        let st = generate(&corpus_params(i)).map_err(|e| e.to_string())?;
        for mode in MODES {
            let mut policy = policy_for(mode, i);
            let (_, stats) = run(st.clone(), policy.as_mut(), Algorithm::Mlogn2m, &opts).map_err(|e| e.to_string())?;
            let audit = stats.cluster_audit.expect("audit requested");
            ensure(audit.violations() == 0, || format!("instance {i}: {audit:?}"))?;
            steps += audit.steps;
        }
    }
    let mut constants = Vec::new();
    for n in [100usize, 200, 400] {
        let st = generate(&GenParams { n, m: 4 * n, cycles: n, seed: n as u64, costed: false })
            .map_err(|e| e.to_string())?;
        let mut policy = policy_for(Mode::Randomized, 1);
        let (_, stats) = run(st, policy.as_mut(), Algorithm::Mlogn2m, &opts).map_err(|e| e.to_string())?;
        let audit = stats.cluster_audit.expect("audit requested");
        ensure(audit.violations() == 0, || format!("n = {n}: {audit:?}"))?;
        constants.push(audit.max_internal_ratio.to_f64());
    }
    let (lo, hi) = constants.iter().fold((f64::MAX, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    let shown = format!("{constants:.3?}");
    ensure(lo > 0.0 && hi <= 2.0 * lo, || format!("C across n = 100, 200, 400: {shown} not within x2"))?;
    Ok(format!("{steps} audited steps, 0 violations; C = {shown}"))
}

fn scaling() -> Outcome {
    let mut rows = Vec::new();
    for n in [100usize, 200, 400] {
        let m = n * n / 8;
        let st = generate(&GenParams { n, m, cycles: m / 2, seed: 7 * n as u64, costed: false })
            .map_err(|e| e.to_string())?;
        let mut policy = policy_for(Mode::Randomized, 3);
        let start = Instant::now();
        let (_, stats) = run(st, policy.as_mut(), Algorithm::Mlogn2m, &RunOptions::default()).map_err(|e| e.to_string())?;
        rows.push((n, m, stats.tree_ops as f64 / m as f64, start.elapsed().as_millis()));
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    let shown: Vec<String> = rows.iter().map(|(n, m, r, ms)| format!("n={n} m={m} ops/m={r:.2} {ms}ms")).collect();
    ensure(hi <= 2.5 * lo, || format!("tree_ops/m spread {:.2}: {}", hi / lo, shown.join("; ")))?;
    Ok(shown.join("; "))
}

fn reduction() -> Outcome {
    let mut checked = 0;
    for i in 0..100u64 {
        let p = GenParams { n: 5 + (i as usize % 20), m: 12 + (i as usize % 40), cycles: 2 + (i as usize % 6), seed: 2000 + i, costed: true };
        let inst = generate_flow(&p).map_err(|e| format!("flow {i}: {e}"))?;
        let text = flowround_cli::emit_instance(&inst);
        let (_, t) = inst.flow.expect("s-t flow");
        let f = inst.state.net_flow(t, flowround::FlowKind::Original);
        ensure(!f.is_integral(), || format!("flow {i}: value {f} is integral"))?;
        for algo in Algorithm::ALL {
            for mode in MODES {
                let cfg = RoundConfig { algo, mode, seed: i, k: None, order_seed: None };
                let out = round_instance(&inst, &cfg).map_err(|e| format!("flow {i} {algo}: {e}"))?;
                let value: Rational = out
                    .lines()
                    .find_map(|l| l.strip_prefix("value "))
                    .and_then(|v| v.split(" -> ").nth(1))
                    .ok_or("missing value line")?
                    .parse()
                    .map_err(|e| format!("{e}"))?;
                ensure(value == f.floor() || value == f.ceil(), || format!("flow {i} {algo}: {f} -> {value}"))?;
                if mode == Mode::Costed {
                    ensure(value >= f.floor(), || format!("flow {i} {algo}: value dropped"))?;
                }
                let report = verify_texts(&text, &out).map_err(|e| e.to_string())?;
                ensure(report.passed(), || format!("flow {i} {algo} {mode:?}: {report}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} rounded s-t flows within floor/ceil, costs non-increasing"))
}

fn flowround(args: &[&str], dir: &Path) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_flowround"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let mut compared = 0;
    let mut twice = |args: &[&str], file: Option<&str>| -> Result<(), String> {
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let stdout = flowround(args, d)?;
            outputs.push(match file {
                Some(f) => std::fs::read(d.join(f)).map_err(|e| e.to_string())?,
                None => stdout,
            });
        }
        ensure(outputs[0] == outputs[1], || format!("{args:?} differs between runs"))?;
        compared += 1;
        Ok(())
    };
    twice(&["gen", "--n", "40", "--m", "160", "--cycles", "30", "--seed", "9", "--costed", "-o", "c.flow"], Some("c.flow"))?;
    twice(&["gen", "--n", "30", "--m", "90", "--cycles", "20", "--seed", "4", "--flow", "-o", "f.flow"], Some("f.flow"))?;
    for algo in ["naive", "mlogn", "n2", "mlogn2m"] {
        for (mode, input) in [("costed", "c.flow"), ("randomized", "c.flow"), ("randomized", "f.flow")] {
            let args = ["round", "-i", input, "--algo", algo, "--mode", mode, "--seed", "17", "--order-seed", "5", "-o", "r.txt"];
            twice(&args, Some("r.txt"))?;
            twice(&["verify", "-i", input, "-r", "r.txt"], None)?;
        }
    }
    twice(&["round", "-i", "c.flow", "--algo", "mlogn2m", "--k", "3", "--seed", "1"], None)?;
    twice(&["expect", "-i", "f.flow", "--trials", "500", "--seed", "8"], None)?;
    twice(&["expect", "-i", "c.flow", "--algo", "n2", "--trials", "300", "--seed", "2"], None)?;
    Ok(format!("{compared} commands byte-identical across repeated runs"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 validity sweep", validity_sweep),
        ("2 exact expectation", exact_expectation),
        ("3 statistical expectation", statistical),
        ("4 dynamic-tree differential", differential),
        ("5 cluster invariants", cluster_invariants),
        ("6 operation-count scaling", scaling),
        ("7 reduction round-trip", reduction),
        ("8 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
