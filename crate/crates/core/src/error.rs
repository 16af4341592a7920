use crate::rational::Rational;

/// Errors raised by the rounding library.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlowError {
    #[error("node {node} out of range (graph has {node_count} nodes)")]
    InvalidNode { node: usize, node_count: usize },
    #[error("edge {edge} out of range (graph has {edge_count} edges)")]
    InvalidEdge { edge: usize, edge_count: usize },
    #[error("not a circulation: node {node} has net flow {net}")]
    NotACirculation { node: usize, net: Rational },
    #[error("not an s-t flow: {0}")]
    NotAFlow(String),
    #[error("missing costs: costed rounding needs a cost on every edge")]
    MissingCosts,
    #[error("nodes {u} and {v} are already in the same tree")]
    SameTree { u: usize, v: usize },
    #[error("no tree edge between {u} and {v}")]
    NoSuchEdge { u: usize, v: usize },
    #[error("nodes {u} and {v} are not connected")]
    NotConnected { u: usize, v: usize },
    #[error("path query needs two distinct nodes, got {0} twice")]
    SameNode(usize),
    #[error("pushing {delta} from {u} to {v} would drive an availability negative")]
    NegativeAvailability { u: usize, v: usize, delta: Rational },
    #[error("degenerate cycle: availabilities {forward} and {backward}")]
    DegenerateCycle { forward: Rational, backward: Rational },
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(Rational),
    #[error("expected exactly one protected edge, found {0}")]
    ProtectedEdgeCount(usize),
    #[error("invalid cluster size parameter k = {0}")]
    InvalidK(usize),
    #[error("graphs differ: {0}")]
    GraphMismatch(String),
    #[error("branch budget of {0} leaves exceeded")]
    BranchBudgetExceeded(usize),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, FlowError>;
