//! Checkers for rounded flows, expectation oracles and the dynamic-tree
//! differential harness.

mod expectation;
mod shadow;

use std::fmt;

pub use expectation::{
    expectation_oracle, statistical_expectation, trial_seed, EdgeExpectation, ExpectationReport, ScriptedPolicy,
};
pub use shadow::{shadow_tree_suite, shadow_tree_suite_with_fault, Divergence, NaiveForest};

use crate::error::{FlowError, Result};
use crate::graph::{FlowKind, FlowState};
use crate::policy::Mode;

/// What a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subject {
    Edge(usize),
    Node(usize),
    Cost,
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Edge(e) => write!(f, "edge {e}"),
            Subject::Node(v) => write!(f, "node {v}"),
            Subject::Cost => f.write_str("cost"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub subject: Subject,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidityReport {
    pub integral: bool,
    pub in_range: bool,
    pub conserved: bool,
    /// Present in costed mode only.
    pub cost_ok: Option<bool>,
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "integral {}", self.integral)?;
        writeln!(f, "in_range {}", self.in_range)?;
        writeln!(f, "conserved {}", self.conserved)?;
        if let Some(ok) = self.cost_ok {
            writeln!(f, "cost_ok {ok}")?;
        }
        for v in &self.violations {
            writeln!(f, "violation {}: {}", v.subject, v.detail)?;
        }
        write!(f, "verdict {}", if self.passed() { "pass" } else { "fail" })
    }
}

/// Compares the working flow of `rounded` against the original flow of
/// `original`: integrality, the `[floor, ceil]` window, conservation and,
/// in costed mode, that total cost did not increase.
pub fn check_all(original: &FlowState, rounded: &FlowState, mode: Mode) -> Result<ValidityReport> {
    let (g0, g1) = (original.graph(), rounded.graph());
    if g0.node_count() != g1.node_count() || g0.edges() != g1.edges() {
        return Err(FlowError::GraphMismatch(format!(
            "{} nodes / {} edges vs {} nodes / {} edges",
            g0.node_count(),
            g0.edge_count(),
            g1.node_count(),
            g1.edge_count()
        )));
    }
    let mut report =
        ValidityReport { integral: true, in_range: true, conserved: true, cost_ok: None, violations: Vec::new() };
    for e in 0..original.edge_count() {
        let f0 = original.original(e);
        let f1 = rounded.working(e);
        if !f1.is_integral() {
            report.integral = false;
            report.violations.push(Violation { subject: Subject::Edge(e), detail: format!("flow {f1} is fractional") });
        }
        if *f1 < f0.floor() || *f1 > f0.ceil() {
            report.in_range = false;
            report.violations.push(Violation {
                subject: Subject::Edge(e),
                detail: format!("flow {f1} outside [{}, {}]", f0.floor(), f0.ceil()),
            });
        }
    }
    for (v, net) in rounded.net_flows(FlowKind::Working).into_iter().enumerate() {
        if !net.is_zero() {
            report.conserved = false;
            report.violations.push(Violation { subject: Subject::Node(v), detail: format!("net flow {net}") });
        }
    }
    if mode == Mode::Costed {
        let costs = original.costs().ok_or(FlowError::MissingCosts)?;
        let probe = FlowState::new(g0.clone(), rounded.workings().to_vec(), Some(costs.to_vec()))?;
        let before = original.total_cost(FlowKind::Original)?;
        let after = probe.total_cost(FlowKind::Original)?;
        let ok = after <= before;
        report.cost_ok = Some(ok);
        if !ok {
            report
                .violations
                .push(Violation { subject: Subject::Cost, detail: format!("cost rose from {before} to {after}") });
        }
    }
    Ok(report)
}
