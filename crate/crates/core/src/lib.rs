//! Rounding fractional flows and circulations to integral ones by canceling
//! fractional cycles.
//!
//! Two rounding modes are supported: [`Mode::Costed`] never increases the
//! total cost, and [`Mode::Randomized`] keeps every edge's expected flow
//! equal to its fractional value. Four interchangeable algorithms are
//! available through [`algorithms::run`].

pub mod algorithms;
pub mod error;
pub mod graph;
pub mod linkcut;
pub mod policy;
pub mod rational;
pub mod verify;

pub use error::{FlowError, Result};
pub use graph::{CostValue, DirectedEdgeRef, Edge, FlowKind, FlowState, Graph};
pub use linkcut::{DynTree, EdgePayload, TreeCounters};
pub use policy::{CancelDecision, CancelPolicy, CostedPolicy, Mode, RandomizedPolicy, RngState};
pub use rational::Rational;
pub use algorithms::{run, Algorithm, ClusterAudit, RunOptions, RunStats};
