//! Line-oriented instance and result files.
//!
//! Instance:
//!
//! ```text
//! flows <n> <m> [costed]
//! flow <s> <t>                  # optional: an s-t flow, not a circulation
//! <tail> <head> <flow> [<cost>] [cap <lo> <hi>] # m lines
//! ```
//!
//! Capacity bounds are optional, must be integers with `lo <= flow <= hi`,
//! and are only validated: rounding stays within `[floor, ceil]` of each flow
//! anyway.
//!
//! Result:
//!
//! ```text
//! result <n> <m> <algo> <mode>
//! <tail> <head> <flow>          # m lines, input order
//! stats cycles_canceled <c> tree_ops <t> ...
//! cost <before> -> <after>      # costed mode
//! value <before> -> <after>     # s-t flows
//! ```
//!
//! Numbers are exact rationals written `p` or `p/q`; decimals such as `1.7`
//! are accepted on input. `#` starts a comment.

use std::fmt::Write as _;

use flowround::{Algorithm, CostValue, FlowState, Graph, Mode, Rational, RunStats};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct FormatError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError { line, msg: msg.into() })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub state: FlowState,
    /// Source and sink when the file holds an s-t flow.
    pub flow: Option<(usize, usize)>,
    /// Declared `[lo, hi]` bounds, one slot per edge.
    pub capacities: Vec<Option<(Rational, Rational)>>,
}

impl Instance {
    pub fn new(state: FlowState, flow: Option<(usize, usize)>) -> Self {
        let capacities = vec![None; state.edge_count()];
        Instance { state, flow, capacities }
    }

    pub fn costed(&self) -> bool {
        self.state.has_costs()
    }
}

/// Non-empty lines with comments stripped, numbered from 1.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let words: Vec<&str> = l.split_whitespace().collect();
        (!words.is_empty()).then_some((i + 1, words))
    })
}

fn number<T: std::str::FromStr>(line: usize, word: &str, what: &str) -> Result<T, FormatError> {
    word.parse().or_else(|_| err(line, format!("bad {what} `{word}`")))
}

fn rational(line: usize, word: &str, what: &str) -> Result<Rational, FormatError> {
    word.parse().or_else(|e| err(line, format!("bad {what} `{word}`: {e}")))
}

pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let mut it = lines(text).peekable();
    let (hl, header) = it.next().ok_or(FormatError { line: 0, msg: "empty input".into() })?;
    let costed = match header.as_slice() {
        ["flows", _, _] => false,
        ["flows", _, _, "costed"] => true,
        _ => return err(hl, "expected `flows <n> <m> [costed]`"),
    };
    let n: usize = number(hl, header[1], "node count")?;
    let m: usize = number(hl, header[2], "edge count")?;

    let mut flow = None;
    if let Some((l, words)) = it.peek() {
        if words[0] == "flow" {
            let l = *l;
            let [_, s, t] = words.as_slice() else {
                return err(l, "expected `flow <s> <t>`");
            };
            let (s, t): (usize, usize) = (number(l, s, "source")?, number(l, t, "sink")?);
            if s >= n || t >= n {
                return err(l, format!("terminal out of range for {n} nodes"));
            }
            flow = Some((s, t));
            it.next();
        }
    }

    let mut graph = Graph::new(n);
    let mut flows = Vec::with_capacity(m);
    let mut costs = Vec::with_capacity(m);
    let mut capacities = Vec::with_capacity(m);
    let mut last = hl;
    for (l, mut words) in it {
        last = l;
        if flows.len() == m {
            return err(l, format!("more than {m} edges"));
        }
        let cap = match words.iter().position(|w| *w == "cap") {
            Some(i) => {
                let [_, lo, hi] = words[i..] else {
                    return err(l, "expected `cap <lo> <hi>` at the end of the line");
                };
                let (lo, hi) = (rational(l, lo, "lower capacity")?, rational(l, hi, "upper capacity")?);
                words.truncate(i);
                Some((lo, hi))
            }
            None => None,
        };
        let expected = if costed { 4 } else { 3 };
        if words.len() != expected {
            return err(l, format!("expected {expected} fields, found {}", words.len()));
        }
        let tail: usize = number(l, words[0], "tail")?;
        let head: usize = number(l, words[1], "head")?;
        if tail >= n || head >= n {
            return err(l, format!("endpoint out of range for {n} nodes"));
        }
        graph.add_edge(tail, head).or_else(|e| err(l, e.to_string()))?;
        let f = rational(l, words[2], "flow")?;
        if let Some((lo, hi)) = &cap {
            if !lo.is_integral() || !hi.is_integral() {
                return err(l, "capacities must be integers");
            }
            if f < *lo || f > *hi {
                return err(l, format!("flow {f} outside capacity [{lo}, {hi}]"));
            }
        }
        flows.push(f);
        capacities.push(cap);
        if costed {
            costs.push(CostValue::finite(rational(l, words[3], "cost")?));
        }
    }
    if flows.len() != m {
        return err(last, format!("expected {m} edges, found {}", flows.len()));
    }
    let state = FlowState::new(graph, flows, costed.then_some(costs)).or_else(|e| err(hl, e.to_string()))?;
    Ok(Instance { state, flow, capacities })
}

pub fn emit_instance(inst: &Instance) -> String {
    let st = &inst.state;
    let mut s = String::new();
    let _ = write!(s, "flows {} {}", st.node_count(), st.edge_count());
    s.push_str(if inst.costed() { " costed\n" } else { "\n" });
    if let Some((src, sink)) = inst.flow {
        let _ = writeln!(s, "flow {src} {sink}");
    }
    for e in 0..st.edge_count() {
        let edge = st.edge(e);
        let _ = write!(s, "{} {} {}", edge.tail, edge.head, st.original(e));
        if let Some(c) = st.costs() {
            let _ = write!(s, " {}", c[e].finite);
        }
        if let Some(Some((lo, hi))) = inst.capacities.get(e) {
            let _ = write!(s, " cap {lo} {hi}");
        }
        s.push('\n');
    }
    s
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Costed => "costed",
        Mode::Randomized => "randomized",
    }
}

pub fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "costed" => Ok(Mode::Costed),
        "randomized" => Ok(Mode::Randomized),
        _ => Err(format!("unknown mode `{s}` (expected costed or randomized)")),
    }
}

/// Everything written to a result file besides the flows themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultSummary {
    pub algo: Algorithm,
    pub mode: Mode,
    pub stats: RunStats,
    pub cost: Option<(CostValue, CostValue)>,
    pub value: Option<(Rational, Rational)>,
}

/// `rounded` holds the rounded flows in its working values, in input order.
pub fn emit_result(rounded: &FlowState, summary: &ResultSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "result {} {} {} {}",
        rounded.node_count(),
        rounded.edge_count(),
        summary.algo,
        mode_name(summary.mode)
    );
    for e in 0..rounded.edge_count() {
        let edge = rounded.edge(e);
        let _ = writeln!(s, "{} {} {}", edge.tail, edge.head, rounded.working(e));
    }
    let st = &summary.stats;
    let _ = write!(
        s,
        "stats cycles_canceled {} tree_ops {} rotations {} merges {} clusters_touched {} max_cluster_size {}",
        st.cycles_canceled, st.tree_ops, st.rotations, st.merges, st.clusters_touched, st.max_cluster_size
    );
    if let Some(k) = st.k {
        let _ = write!(s, " k {k}");
    }
    s.push('\n');
    if let Some((a, b)) = &summary.cost {
        let _ = writeln!(s, "cost {a} -> {b}");
    }
    if let Some((a, b)) = &summary.value {
        let _ = writeln!(s, "value {a} -> {b}");
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedResult {
    pub node_count: usize,
    pub algo: Algorithm,
    pub mode: Mode,
    pub edges: Vec<(usize, usize, Rational)>,
}

/// Reads the header and flows of a result file; trailer lines are skipped.
pub fn parse_result(text: &str) -> Result<ParsedResult, FormatError> {
    let mut it = lines(text);
    let (hl, header) = it.next().ok_or(FormatError { line: 0, msg: "empty result".into() })?;
    let ["result", n, m, algo, mode] = header.as_slice() else {
        return err(hl, "expected `result <n> <m> <algo> <mode>`");
    };
    let node_count: usize = number(hl, n, "node count")?;
    let m: usize = number(hl, m, "edge count")?;
    let algo: Algorithm = algo.parse().or_else(|e: String| err(hl, e))?;
    let mode = parse_mode(mode).or_else(|e| err(hl, e))?;
    let mut edges = Vec::with_capacity(m);
    for (l, words) in it {
        if matches!(words[0], "stats" | "cost" | "value") {
            continue;
        }
        if edges.len() == m {
            return err(l, format!("more than {m} edges"));
        }
        let [t, h, f] = words.as_slice() else {
            return err(l, "expected `<tail> <head> <flow>`");
        };
        edges.push((number(l, t, "tail")?, number(l, h, "head")?, rational(l, f, "flow")?));
    }
    if edges.len() != m {
        return err(hl, format!("expected {m} edges, found {}", edges.len()));
    }
    Ok(ParsedResult { node_count, algo, mode, edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "# triangle\nflows 3 3 costed\n0 1 1/2 1\n1 2 0.5 1 # decimal\n2 0 1/2 1\n";

    #[test]
    fn parses_triangle() {
        let inst = parse_instance(TRIANGLE).unwrap();
        assert_eq!(inst.state.edge_count(), 3);
        assert!(inst.costed());
        assert_eq!(inst.state.original(1), &"1/2".parse::<Rational>().unwrap());
        assert_eq!(inst.flow, None);
    }

    #[test]
    fn decimal_is_exact() {
        let inst = parse_instance("flows 2 2\n0 1 1.7\n1 0 1.7\n").unwrap();
        assert_eq!(inst.state.original(0), &Rational::new(17, 10));
    }

    #[test]
    fn round_trip() {
        let inst = parse_instance(TRIANGLE).unwrap();
        let text = emit_instance(&inst);
        assert_eq!(parse_instance(&text).unwrap(), inst);
        let flow = parse_instance("flows 2 1\nflow 0 1\n0 1 5/2\n").unwrap();
        assert_eq!(flow.flow, Some((0, 1)));
        assert_eq!(parse_instance(&emit_instance(&flow)).unwrap(), flow);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(parse_instance("").unwrap_err().line, 0);
        assert_eq!(parse_instance("flows 2 1\n0 5 1\n").unwrap_err().line, 2);
        assert_eq!(parse_instance("flows 2 2\n0 1 1\n").unwrap_err().line, 2);
        assert_eq!(parse_instance("flows 2 1 costed\n0 1 1\n").unwrap_err().line, 2);
        assert_eq!(parse_instance("flows 2 1\n0 1 x\n").unwrap_err().line, 2);
        assert_eq!(parse_instance("circ 2 1\n").unwrap_err().line, 1);
        assert_eq!(parse_instance("flows 2 1\n0 1 1/0\n").unwrap_err().line, 2);
        assert_eq!(parse_instance("flows 2 2\n0 1 1/2\n1 0 1/2 cap 1 2\n").unwrap_err().line, 3);
        assert_eq!(parse_instance("flows 2 1\n0 1 1/2 cap 0 1/2\n").unwrap_err().line, 2);
        assert_eq!(parse_instance("flows 2 1\n0 1 1/2 cap 0\n").unwrap_err().line, 2);
    }

    #[test]
    fn capacities_round_trip() {
        let text = "flows 2 2 costed\n0 1 1/2 3 cap 0 1\n1 0 1/2 -1\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.capacities[0], Some((Rational::zero(), Rational::one())));
        assert_eq!(inst.capacities[1], None);
        assert_eq!(emit_instance(&inst), text);
    }

    #[test]
    fn result_round_trip() {
        let inst = parse_instance(TRIANGLE).unwrap();
        let summary = ResultSummary {
            algo: Algorithm::N2,
            mode: Mode::Costed,
            stats: RunStats::default(),
            cost: Some((CostValue::finite(Rational::new(3, 2)), CostValue::zero())),
            value: None,
        };
        let text = emit_result(&inst.state, &summary);
        assert!(text.contains("cost 3/2 -> 0\n"));
        let parsed = parse_result(&text).unwrap();
        assert_eq!(parsed.algo, Algorithm::N2);
        assert_eq!(parsed.edges[2], (2, 0, Rational::new(1, 2)));
    }
}
