//! Command implementations. Each `*_text` function is pure; the `cmd_*`
//! wrappers handle files, printing and exit codes.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use flowround::algorithms::default_k;
use flowround::policy::{circulation_from_flow, flow_from_circulation, policy_for};
use flowround::verify::{check_all, expectation_oracle, statistical_expectation, ExpectationReport, ValidityReport};
use flowround::{run, Algorithm, FlowError, FlowKind, FlowState, Mode, RunOptions};

use crate::format::{emit_instance, emit_result, parse_instance, parse_result, FormatError, Instance, ResultSummary};
use crate::gen::{generate, generate_flow, GenError, GenParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {err}")]
    Parse { path: String, err: FormatError },
    #[error("{path}: {err}")]
    Io { path: String, err: std::io::Error },
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Flow(
                FlowError::Invariant(_)
                | FlowError::DegenerateCycle { .. }
                | FlowError::NegativeAvailability { .. }
                | FlowError::SameTree { .. }
                | FlowError::NoSuchEdge { .. }
                | FlowError::NotConnected { .. }
                | FlowError::SameNode(_)
                | FlowError::ProbabilityOutOfRange(_)
                | FlowError::ProtectedEdgeCount(_),
            ) => EXIT_INVARIANT,
            _ => EXIT_USAGE,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|err| CliError::Io { path: path.display().to_string(), err })
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    parse_instance(&read(path)?).map_err(|err| CliError::Parse { path: path.display().to_string(), err })
}

/// Writes to `output`, or to `stdout` when no path is given.
fn emit(output: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    let res = match output {
        Some(p) => std::fs::write(p, text),
        None => stdout.write_all(text.as_bytes()),
    };
    res.map_err(|err| CliError::Io { path: output.map_or("<stdout>".into(), |p| p.display().to_string()), err })
}

/// Report a command's outcome on `stderr` and turn it into an exit code.
fn finish(res: Result<i32, CliError>, stderr: &mut dyn Write) -> i32 {
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// The circulation actually rounded: the instance itself, or its s-t flow
/// closed by a protected sink-to-source edge.
fn to_circulation(inst: &Instance, mode: Mode) -> Result<FlowState, CliError> {
    if mode == Mode::Costed && !inst.costed() {
        return Err(FlowError::MissingCosts.into());
    }
    match inst.flow {
        Some((s, t)) => Ok(circulation_from_flow(&inst.state, s, t, mode)?),
        None => {
            inst.state.check_circulation(FlowKind::Original)?;
            Ok(inst.state.clone())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundConfig {
    pub algo: Algorithm,
    pub mode: Mode,
    pub seed: u64,
    pub k: Option<usize>,
    pub order_seed: Option<u64>,
}

impl RoundConfig {
    fn run_options(&self) -> RunOptions {
        RunOptions { k: self.k, order_seed: self.order_seed, audit_clusters: false }
    }
}

/// Rounds a parsed instance and renders the result file.
pub fn round_instance(inst: &Instance, cfg: &RoundConfig) -> Result<String, CliError> {
    let circ = to_circulation(inst, cfg.mode)?;
    let mut policy = policy_for(cfg.mode, cfg.seed);
    let (out, stats) = run(circ.clone(), policy.as_mut(), cfg.algo, &cfg.run_options())?;
    let cost = match cfg.mode {
        Mode::Costed => {
            let mut after = circ.clone();
            after.set_workings(out.workings().to_vec())?;
            Some((circ.total_cost(FlowKind::Original)?, after.total_cost(FlowKind::Working)?))
        }
        Mode::Randomized => None,
    };
    let (rounded, value) = match inst.flow {
        Some(_) => {
            let last = circ.edge_count() - 1;
            let value = (circ.original(last).clone(), out.working(last).clone());
            (flow_from_circulation(&out)?, Some(value))
        }
        None => (out, None),
    };
    Ok(emit_result(&rounded, &ResultSummary { algo: cfg.algo, mode: cfg.mode, stats, cost, value }))
}

pub fn round_text(input: &str, cfg: &RoundConfig) -> Result<String, CliError> {
    let inst = parse_instance(input).map_err(|err| CliError::Parse { path: "<input>".into(), err })?;
    round_instance(&inst, cfg)
}

pub fn cmd_round(
    input: &Path,
    output: Option<&Path>,
    cfg: &RoundConfig,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let res = (|| {
        let text = round_instance(&load_instance(input)?, cfg)?;
        emit(output, &text, stdout)?;
        Ok(EXIT_OK)
    })();
    finish(res, stderr)
}

/// Checks a result file against its instance.
pub fn verify_texts(input: &str, result: &str) -> Result<ValidityReport, CliError> {
    let inst = parse_instance(input).map_err(|err| CliError::Parse { path: "<input>".into(), err })?;
    let res = parse_result(result).map_err(|err| CliError::Parse { path: "<result>".into(), err })?;
    let st = &inst.state;
    let same_shape = res.node_count == st.node_count()
        && res.edges.len() == st.edge_count()
        && res.edges.iter().enumerate().all(|(e, (t, h, _))| {
            let edge = st.edge(e);
            edge.tail == *t && edge.head == *h
        });
    if !same_shape {
        return Err(FlowError::GraphMismatch("result edges do not match the instance".into()).into());
    }
    let circ = to_circulation(&inst, res.mode)?;
    let mut flows: Vec<_> = res.edges.into_iter().map(|(_, _, f)| f).collect();
    if let Some((_, t)) = inst.flow {
        let mut probe = st.clone();
        probe.set_workings(flows.clone())?;
        flows.push(probe.net_flow(t, FlowKind::Working));
    }
    let mut rounded = circ.clone();
    rounded.set_workings(flows)?;
    Ok(check_all(&circ, &rounded, res.mode)?)
}

pub fn cmd_verify(input: &Path, result: &Path, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let res = (|| {
        let report = verify_texts(&read(input)?, &read(result)?)?;
        emit(None, &format!("{report}\n"), stdout)?;
        Ok(if report.passed() { EXIT_OK } else { EXIT_VERIFY_FAILED })
    })();
    finish(res, stderr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectMethod {
    Oracle { max_branches: usize },
    Trials(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectConfig {
    pub algo: Algorithm,
    pub method: ExpectMethod,
    pub seed: u64,
    pub k: Option<usize>,
    pub order_seed: Option<u64>,
}

pub fn expect_instance(inst: &Instance, cfg: &ExpectConfig) -> Result<ExpectationReport, CliError> {
    let circ = to_circulation(inst, Mode::Randomized)?;
    let opts = RunOptions { k: cfg.k, order_seed: cfg.order_seed, audit_clusters: false };
    Ok(match cfg.method {
        ExpectMethod::Oracle { max_branches } => expectation_oracle(&circ, cfg.algo, &opts, max_branches)?,
        ExpectMethod::Trials(t) => statistical_expectation(&circ, cfg.algo, &opts, t, cfg.seed)?,
    })
}

pub fn cmd_expect(input: &Path, cfg: &ExpectConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let res = (|| {
        let report = expect_instance(&load_instance(input)?, cfg)?;
        emit(None, &format!("{report}\n"), stdout)?;
        Ok(if report.passed() { EXIT_OK } else { EXIT_VERIFY_FAILED })
    })();
    finish(res, stderr)
}

/// Renders a generated circulation, or an s-t flow when `flow` is set.
pub fn gen_text(params: &GenParams, flow: bool) -> Result<String, CliError> {
    let inst = if flow { generate_flow(params)? } else { Instance::new(generate(params)?, None) };
    Ok(emit_instance(&inst))
}

pub fn cmd_gen(
    params: &GenParams,
    flow: bool,
    output: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let res = gen_text(params, flow).and_then(|text| emit(output, &text, stdout)).map(|_| EXIT_OK);
    finish(res, stderr)
}

/// One entry of a k sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KChoice {
    Fixed(usize),
    /// `ceil(n^2 / m)`.
    Auto,
    /// The node count.
    N,
}

impl std::str::FromStr for KChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(KChoice::Auto),
            "n" => Ok(KChoice::N),
            _ => s.parse().map(KChoice::Fixed).map_err(|_| format!("bad k `{s}` (expected an integer, auto or n)")),
        }
    }
}

impl KChoice {
    fn resolve(self, n: usize, m: usize) -> usize {
        match self {
            KChoice::Fixed(k) => k,
            KChoice::Auto => default_k(n, m),
            KChoice::N => n.max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig {
    pub algos: Vec<Algorithm>,
    pub k_sweep: Vec<KChoice>,
    pub mode: Mode,
    pub seed: u64,
}

pub const BENCH_HEADER: &str = "instance,algo,n,m,k,tree_ops,merges,cycles_canceled,wall_us";

/// Runs every algorithm over every instance file in `dir`, in file-name
/// order. Only the clustered algorithm is repeated for each k.
pub fn bench_dir(dir: &Path, cfg: &BenchConfig) -> Result<String, CliError> {
    let io = |err| CliError::Io { path: dir.display().to_string(), err };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    files.retain(|p| p.is_file());
    files.sort();
    let mut csv = format!("{BENCH_HEADER}\n");
    for path in files {
        let inst = load_instance(&path)?;
        let circ = to_circulation(&inst, cfg.mode)?;
        let (n, m) = (circ.node_count(), circ.edge_count());
        let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        for &algo in &cfg.algos {
            let ks: Vec<Option<usize>> = if algo == Algorithm::Mlogn2m {
                cfg.k_sweep.iter().map(|k| Some(k.resolve(n, m))).collect()
            } else {
                vec![None]
            };
            for k in ks {
                let opts = RunOptions { k, order_seed: None, audit_clusters: false };
                let mut policy = policy_for(cfg.mode, cfg.seed);
                let start = Instant::now();
                let (_, stats) = run(circ.clone(), policy.as_mut(), algo, &opts)?;
                let wall = start.elapsed().as_micros();
                let k = stats.k.map(|k| k.to_string()).unwrap_or_default();
                let _ = writeln!(
                    csv,
                    "{name},{algo},{n},{m},{k},{},{},{},{wall}",
                    stats.tree_ops, stats.merges, stats.cycles_canceled
                );
            }
        }
    }
    Ok(csv)
}

pub fn cmd_bench(dir: &Path, cfg: &BenchConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let res = bench_dir(dir, cfg).and_then(|csv| emit(None, &csv, stdout)).map(|_| EXIT_OK);
    finish(res, stderr)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "flows 3 3 costed\n0 1 1/2 1\n1 2 1/2 1\n2 0 1/2 1\n";

    fn cfg(algo: Algorithm, mode: Mode) -> RoundConfig {
        RoundConfig { algo, mode, seed: 1, k: None, order_seed: None }
    }

    #[test]
    fn triangle_costed_naive() {
        let out = round_text(TRIANGLE, &cfg(Algorithm::Naive, Mode::Costed)).unwrap();
        let res = parse_result(&out).unwrap();
        assert!(res.edges.iter().all(|(_, _, f)| f.is_zero()));
        assert!(out.contains("\ncost 3/2 -> 0\n"), "{out}");
        assert!(verify_texts(TRIANGLE, &out).unwrap().passed());
    }

    #[test]
    fn missing_costs() {
        let e = round_text("flows 2 2\n0 1 1/2\n1 0 1/2\n", &cfg(Algorithm::N2, Mode::Costed)).unwrap_err();
        assert!(e.to_string().contains("missing costs"));
        assert_eq!(e.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn invariant_breaches_exit_three() {
        assert_eq!(CliError::from(FlowError::Invariant("x".into())).exit_code(), EXIT_INVARIANT);
        assert_eq!(CliError::from(FlowError::MissingCosts).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_USAGE);
    }

    #[test]
    fn not_a_circulation() {
        let e = round_text("flows 2 1\n0 1 1/2\n", &cfg(Algorithm::Naive, Mode::Randomized)).unwrap_err();
        assert!(matches!(e, CliError::Flow(FlowError::NotACirculation { .. })));
    }

    #[test]
    fn invalid_k() {
        let c = RoundConfig { k: Some(0), ..cfg(Algorithm::Mlogn2m, Mode::Randomized) };
        assert_eq!(round_text(TRIANGLE, &c).unwrap_err().exit_code(), EXIT_USAGE);
    }

    #[test]
    fn s_t_flow_value() {
        let text = "flows 3 2 costed\nflow 0 2\n0 1 5/2 1\n1 2 5/2 1\n";
        for algo in Algorithm::ALL {
            let out = round_text(text, &cfg(algo, Mode::Costed)).unwrap();
            assert!(out.contains("\nvalue 5/2 -> 3\n"), "{out}");
            assert!(verify_texts(text, &out).unwrap().passed());
        }
    }

    #[test]
    fn verify_catches_corruption() {
        let good = "flows 2 2\n0 1 3\n1 0 3\n";
        let out = round_text(good, &cfg(Algorithm::Naive, Mode::Randomized)).unwrap();
        assert!(verify_texts(good, &out).unwrap().passed());
        let bad = out.replacen("0 1 3", "0 1 4", 1);
        let report = verify_texts(good, &bad).unwrap();
        assert!(!report.passed());
        assert!(report.to_string().contains("violation edge 0"));

        let worse = "result 3 3 naive costed\n0 1 1\n1 2 1\n2 0 1\n";
        let report = verify_texts(TRIANGLE, worse).unwrap();
        assert_eq!(report.cost_ok, Some(false));

        let shape = "result 3 3 naive costed\n1 0 0\n1 2 0\n2 0 0\n";
        assert!(matches!(verify_texts(TRIANGLE, shape), Err(CliError::Flow(FlowError::GraphMismatch(_)))));
    }

    #[test]
    fn oracle_triangle() {
        let inst = parse_instance(TRIANGLE).unwrap();
        let c = ExpectConfig {
            algo: Algorithm::Mlogn2m,
            method: ExpectMethod::Oracle { max_branches: 100 },
            seed: 0,
            k: None,
            order_seed: None,
        };
        let text = expect_instance(&inst, &c).unwrap().to_string();
        assert_eq!(text.matches("1/2 == 1/2 exact").count(), 3, "{text}");
        let budget = ExpectConfig { method: ExpectMethod::Oracle { max_branches: 1 }, ..c };
        assert!(matches!(expect_instance(&inst, &budget), Err(CliError::Flow(FlowError::BranchBudgetExceeded(1)))));
    }

    #[test]
    fn trials_report_tolerance() {
        let inst = parse_instance(TRIANGLE).unwrap();
        let c = ExpectConfig {
            algo: Algorithm::Mlogn,
            method: ExpectMethod::Trials(10_000),
            seed: 3,
            k: None,
            order_seed: None,
        };
        let report = expect_instance(&inst, &c).unwrap();
        assert!(report.to_string().starts_with("trials 10000 tolerance 0.025000\n"));
        assert!(report.passed());
    }

    #[test]
    fn gen_triangle_text() {
        let p = GenParams { n: 3, m: 3, cycles: 1, seed: 4, costed: false };
        let text = gen_text(&p, false).unwrap();
        let inst = parse_instance(&text).unwrap();
        let f = inst.state.original(0).clone();
        assert!(!f.is_integral() && inst.state.originals().iter().all(|x| *x == f));
        assert!(gen_text(&GenParams { n: 2, ..p }, false).is_err());
    }

    #[test]
    fn k_choices() {
        assert_eq!("auto".parse::<KChoice>().unwrap().resolve(10, 25), 4);
        assert_eq!("n".parse::<KChoice>().unwrap().resolve(10, 25), 10);
        assert_eq!("3".parse::<KChoice>().unwrap(), KChoice::Fixed(3));
        assert!("x".parse::<KChoice>().is_err());
    }

    #[test]
    fn bench_empty_and_small() {
        let dir = tempfile::tempdir().unwrap();
        let c = BenchConfig {
            algos: Algorithm::ALL.to_vec(),
            k_sweep: vec![KChoice::Fixed(1), KChoice::Auto, KChoice::N],
            mode: Mode::Randomized,
            seed: 0,
        };
        assert_eq!(bench_dir(dir.path(), &c).unwrap(), format!("{BENCH_HEADER}\n"));
        std::fs::write(dir.path().join("a.flow"), TRIANGLE).unwrap();
        let csv = bench_dir(dir.path(), &c).unwrap();
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows.len(), 6);
        assert!(rows[0].starts_with("a.flow,naive,3,3,,"));
        assert!(rows.iter().any(|r| r.starts_with("a.flow,mlogn2m,3,3,1,")));
    }
}
