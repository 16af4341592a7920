use std::path::Path;
use std::process::{Command, Output};

use flowround::{CostValue, FlowState, Graph, Rational};
use flowround_cli::commands::{bench_dir, BenchConfig, KChoice};
use flowround_cli::{emit_instance, parse_instance, GenParams, Instance};
use proptest::prelude::*;

fn flowround(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowround")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn round_then_verify_closed_loop() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for seed in 0..6u64 {
        let seed_s = seed.to_string();
        let flow = seed % 2 == 1;
        let mut gen = vec!["gen", "--n", "15", "--m", "40", "--cycles", "12", "--seed", &seed_s, "--costed", "-o", "in.flow"];
        if flow {
            gen.push("--flow");
        }
        assert!(flowround(&gen, d).status.success());
        for algo in ["naive", "mlogn", "n2", "mlogn2m"] {
            for mode in ["costed", "randomized"] {
                let r = flowround(&["round", "-i", "in.flow", "--algo", algo, "--mode", mode, "--seed", &seed_s, "-o", "out.txt"], d);
                assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
                let v = flowround(&["verify", "-i", "in.flow", "-r", "out.txt"], d);
                assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
                assert!(stdout(&v).ends_with("verdict pass\n"));
            }
        }
    }
}

#[test]
fn triangle_costed_naive_via_binary() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.flow"), "flows 3 3 costed\n0 1 1/2 1\n1 2 1/2 1\n2 0 1/2 1\n").unwrap();
    let o = flowround(&["round", "-i", "t.flow", "--algo", "naive", "--mode", "costed"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("result 3 3 naive costed\n0 1 0\n1 2 0\n2 0 0\n"), "{text}");
    assert!(text.ends_with("cost 3/2 -> 0\n"));

    let e = flowround(&["expect", "-i", "t.flow", "--oracle"], dir.path());
    assert_eq!(e.status.code(), Some(0));
    assert_eq!(stdout(&e).matches("1/2 == 1/2 exact").count(), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("plain.flow"), "flows 2 2\n0 1 1/2\n1 0 1/2\n").unwrap();
    std::fs::write(d.join("broken.flow"), "flows 2 2\n0 1 1/2\n").unwrap();
    std::fs::write(d.join("open.flow"), "flows 2 1\n0 1 1/2\n").unwrap();
    std::fs::write(d.join("int.flow"), "flows 2 2\n0 1 3\n1 0 3\n").unwrap();
    std::fs::write(d.join("bad.txt"), "result 2 2 naive randomized\n0 1 4\n1 0 3\n").unwrap();

    let o = flowround(&["round", "-i", "plain.flow", "--mode", "costed"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing costs"));

    let o = flowround(&["round", "-i", "broken.flow"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let o = flowround(&["round", "-i", "open.flow"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not a circulation"));

    assert_eq!(flowround(&["round", "-i", "plain.flow", "--algo", "fastest"], d).status.code(), Some(2));
    assert_eq!(flowround(&["round", "-i", "plain.flow", "--algo", "mlogn2m", "--k", "0"], d).status.code(), Some(2));
    assert_eq!(flowround(&["gen", "--n", "2", "--m", "2", "--cycles", "1"], d).status.code(), Some(2));
    assert_eq!(flowround(&["expect", "-i", "plain.flow", "--oracle", "--max-branches", "1"], d).status.code(), Some(2));

    let o = flowround(&["verify", "-i", "int.flow", "-r", "bad.txt"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violation edge 0"));

    let o = flowround(&["expect", "-i", "int.flow", "--trials", "50"], d);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn bench_sweep_prefers_default_k() {
    let dir = tempfile::tempdir().unwrap();
    let p = GenParams { n: 120, m: 120 * 120 / 8, cycles: 900, seed: 31, costed: false };
    std::fs::write(dir.path().join("dense.flow"), flowround_cli::commands::gen_text(&p, false).unwrap()).unwrap();
    let cfg = BenchConfig {
        algos: vec![flowround::Algorithm::Naive, flowround::Algorithm::Mlogn2m],
        k_sweep: vec![KChoice::Fixed(1), KChoice::Auto, KChoice::N],
        mode: flowround::Mode::Randomized,
        seed: 0,
    };
    let csv = bench_dir(dir.path(), &cfg).unwrap();
    let ops: Vec<u64> = csv
        .lines()
        .filter(|l| l.contains(",mlogn2m,"))
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    assert_eq!(ops.len(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("dense.flow,naive,"));
    let best = *ops.iter().min().unwrap();
    assert!(ops[1] <= 4 * best, "{csv}");
}

fn arb_instance() -> impl Strategy<Value = Instance> {
    (1usize..6, 0usize..10, any::<bool>(), any::<bool>()).prop_flat_map(|(n, m, costed, flow)| {
        let edge = (0..n, 0..n, -5000i64..5000, 1i64..1000, -50i64..50, 1i64..20, prop::option::of(0i64..3));
        (prop::collection::vec(edge, m), Just(n), Just(costed), Just(flow), 0..n, 0..n)
    })
    .prop_map(|(edges, n, costed, flow, s, t)| {
        let mut g = Graph::new(n);
        for &(a, b, ..) in &edges {
            g.add_edge(a, b).unwrap();
        }
        let flows: Vec<Rational> = edges.iter().map(|e| Rational::new(e.2, e.3)).collect();
        let costs = costed.then(|| edges.iter().map(|e| CostValue::finite(Rational::new(e.4, e.5))).collect());
        let capacities = edges
            .iter()
            .zip(&flows)
            .map(|(e, f)| e.6.map(|pad| (f.floor() - Rational::from_integer(pad), f.ceil() + Rational::from_integer(pad))))
            .collect();
        let state = FlowState::new(g, flows, costs).unwrap();
        Instance { state, flow: flow.then_some((s, t)), capacities }
    })
}

proptest! {
    #[test]
    fn format_round_trips(inst in arb_instance()) {
        let text = emit_instance(&inst);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(emit_instance(&back), text);
    }

    #[test]
    fn generated_instances_are_circulations(n in 3usize..30, extra in 0usize..60, cycles in 0usize..40, seed: u64, costed: bool) {
        let p = GenParams { n, m: n + extra, cycles, seed, costed };
        let st = flowround_cli::generate(&p).unwrap();
        prop_assert!(st.check_circulation(flowround::FlowKind::Original).is_ok());
        let text = emit_instance(&Instance::new(st.clone(), None));
        prop_assert_eq!(parse_instance(&text).unwrap().state, st);
    }
}
