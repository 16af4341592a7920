//! Cycle-canceling rounders.
//!
//! Every algorithm takes a fractional circulation and a [`CancelPolicy`] and
//! returns an integral circulation whose flows differ from the input by less
//! than one unit per edge.

mod clustered;
mod mlogn;
mod n2;
mod naive;

use std::fmt;
use std::str::FromStr;

pub use clustered::round_mlogn2m;
pub use mlogn::round_mlogn;
pub use n2::round_n2;
pub use naive::round_naive;

use crate::error::{FlowError, Result};
use crate::graph::{CostValue, DirectedEdgeRef, FlowKind, FlowState};
use crate::policy::{CancelDecision, CancelPolicy, RngState};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Repeated depth-first cycle search; the reference implementation.
    Naive,
    /// Edge-by-edge insertion into one dynamic forest.
    Mlogn,
    /// Node-by-node batches over an explicit forest.
    N2,
    /// Node-by-node batches over a forest of bounded-size clusters.
    Mlogn2m,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Naive, Algorithm::Mlogn, Algorithm::N2, Algorithm::Mlogn2m];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Naive => "naive",
            Algorithm::Mlogn => "mlogn",
            Algorithm::N2 => "n2",
            Algorithm::Mlogn2m => "mlogn2m",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected naive, mlogn, n2 or mlogn2m)"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Cluster size parameter for [`Algorithm::Mlogn2m`]; `None` picks the default.
    pub k: Option<usize>,
    /// Permutes the edge or node processing order; `None` keeps input order.
    pub order_seed: Option<u64>,
    /// Record cluster invariants after every merge step.
    pub audit_clusters: bool,
}

/// Cluster invariants observed by the clustered algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAudit {
    pub k: usize,
    pub node_count: usize,
    /// Number of audited merge steps.
    pub steps: u64,
    /// Clusters found with more than `2k` members.
    pub size_violations: u64,
    /// Adjacent visited clusters that are both smaller than `k`.
    pub adjacency_violations: u64,
    pub max_cluster_size: usize,
    /// Largest number of internal visited clusters in one step.
    pub max_internal_clusters: usize,
    /// Largest `internal * k / n` over all steps.
    pub max_internal_ratio: Rational,
}

impl ClusterAudit {
    fn new(k: usize, node_count: usize) -> Self {
        ClusterAudit {
            k,
            node_count,
            steps: 0,
            size_violations: 0,
            adjacency_violations: 0,
            max_cluster_size: 0,
            max_internal_clusters: 0,
            max_internal_ratio: Rational::zero(),
        }
    }

    pub fn violations(&self) -> u64 {
        self.size_violations + self.adjacency_violations
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    pub cycles_canceled: u64,
    /// Dynamic-tree operations, or node visits for the explicit-forest algorithm.
    pub tree_ops: u64,
    pub rotations: u64,
    pub merges: u64,
    pub clusters_touched: u64,
    pub max_cluster_size: usize,
    /// Cluster size parameter actually used, if any.
    pub k: Option<usize>,
    pub cluster_audit: Option<ClusterAudit>,
}

/// Rounds `state` with `algo`. Self-loops are canceled before dispatch.
pub fn run(
    state: FlowState,
    policy: &mut dyn CancelPolicy,
    algo: Algorithm,
    opts: &RunOptions,
) -> Result<(FlowState, RunStats)> {
    match algo {
        Algorithm::Naive => round_naive(state, policy),
        Algorithm::Mlogn => round_mlogn(state, policy, opts),
        Algorithm::N2 => round_n2(state, policy, opts),
        Algorithm::Mlogn2m => round_mlogn2m(state, policy, opts),
    }
}

/// Default cluster size: `ceil(n^2 / m)` clamped to `[1, n]`.
pub fn default_k(node_count: usize, edge_count: usize) -> usize {
    let n = node_count.max(1);
    let m = edge_count.max(1);
    (n * n).div_ceil(m).clamp(1, n)
}

/// Shared entry checks and self-loop cancellation.
pub(crate) fn prepare(state: &mut FlowState, policy: &mut dyn CancelPolicy, stats: &mut RunStats) -> Result<()> {
    if policy.uses_costs() && !state.has_costs() {
        return Err(FlowError::MissingCosts);
    }
    state.check_circulation(FlowKind::Working)?;
    for e in 0..state.edge_count() {
        let (f0, f1) = (state.original(e), state.working(e));
        if *f1 < f0.floor() || *f1 > f0.ceil() {
            return Err(FlowError::Invariant(format!("edge {e}: working flow {f1} outside range of {f0}")));
        }
    }
    for e in 0..state.edge_count() {
        if !state.edge(e).is_self_loop() || state.working(e).is_integral() {
            continue;
        }
        let fwd = DirectedEdgeRef::forward(e);
        let a = state.availability(fwd);
        let b = state.availability(fwd.flipped());
        let d = decide(policy, || Ok(state.directed_cost(fwd)), &a, &b)?;
        state.push(fwd, &signed(&d));
        stats.cycles_canceled += 1;
    }
    Ok(())
}

pub(crate) fn finish(state: &FlowState) -> Result<()> {
    match state.fractional_edges().first() {
        Some(e) => Err(FlowError::Invariant(format!("edge {e} still fractional after rounding"))),
        None => Ok(()),
    }
}

/// Asks the policy, computing the forward cycle cost only when it is needed.
pub(crate) fn decide(
    policy: &mut dyn CancelPolicy,
    cost: impl FnOnce() -> Result<CostValue>,
    a: &Rational,
    b: &Rational,
) -> Result<CancelDecision> {
    if !a.is_positive() || !b.is_positive() {
        return Err(FlowError::DegenerateCycle { forward: a.clone(), backward: b.clone() });
    }
    if policy.uses_costs() {
        let c = cost()?;
        policy.decide(Some(&c), a, b)
    } else {
        policy.decide(None, a, b)
    }
}

/// Flow pushed in the cycle's forward direction (negative when backward).
pub(crate) fn signed(d: &CancelDecision) -> Rational {
    if d.forward {
        d.amount.clone()
    } else {
        -&d.amount
    }
}

/// Identity, or a seeded Fisher-Yates shuffle of `0..len`.
pub(crate) fn processing_order(len: usize, seed: Option<u64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    if let Some(seed) = seed {
        let mut rng = RngState::new(seed);
        for i in (1..len).rev() {
            let j = rng.below_u64(i as u64 + 1) as usize;
            order.swap(i, j);
        }
    }
    order
}

/// Availability pair `(tail→head, head→tail)` of edge `e`.
pub(crate) fn avail_pair(state: &FlowState, e: usize) -> (Rational, Rational) {
    let fwd = DirectedEdgeRef::forward(e);
    (state.availability(fwd), state.availability(fwd.flipped()))
}

/// Sets the working flow of `e` from its current tail→head availability.
pub(crate) fn write_back(state: &mut FlowState, e: usize, avail_forward: &Rational) {
    let f = state.original(e).ceil() - avail_forward;
    state.set_working(e, f);
}

/// Directed reference for traversing `e` starting at `from`.
pub(crate) fn dir_from(state: &FlowState, e: usize, from: usize) -> DirectedEdgeRef {
    DirectedEdgeRef { edge_id: e, forward: state.edge(e).tail == from }
}
