//! Directed multigraphs and the flow state that rounding algorithms mutate.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};

use crate::error::{FlowError, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
}

impl Edge {
    pub fn is_self_loop(&self) -> bool {
        self.tail == self.head
    }

    /// The endpoint opposite `v`. Panics if `v` is not an endpoint.
    pub fn other(&self, v: usize) -> usize {
        if v == self.tail {
            self.head
        } else {
            assert_eq!(v, self.head, "node {v} is not an endpoint");
            self.tail
        }
    }
}

/// A directed multigraph with dense node ids `0..n` and edge ids `0..m`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    node_count: usize,
    edges: Vec<Edge>,
}

impl Graph {
    pub fn new(node_count: usize) -> Self {
        Graph { node_count, edges: Vec::new() }
    }

    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::new(node_count);
        for &(t, h) in edges {
            g.add_edge(t, h)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, tail: usize, head: usize) -> Result<usize> {
        for v in [tail, head] {
            if v >= self.node_count {
                return Err(FlowError::InvalidNode { node: v, node_count: self.node_count });
            }
        }
        self.edges.push(Edge { tail, head });
        Ok(self.edges.len() - 1)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: usize) -> Edge {
        self.edges[id]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Incident edge ids per node, ascending. Self-loops appear once.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.node_count];
        for (id, e) in self.edges.iter().enumerate() {
            inc[e.tail].push(id);
            if e.head != e.tail {
                inc[e.head].push(id);
            }
        }
        inc
    }

    fn remove_last_edge(&mut self) -> Option<Edge> {
        self.edges.pop()
    }
}

/// Per-unit or total cost with an exact stand-in for minus infinity.
///
/// The value is `infinite_units * (-inf sentinel weight) + finite`, ordered
/// lexicographically on `(infinite_units, finite)`: any negative number of
/// infinite units is cheaper than every finite cost.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CostValue {
    pub infinite_units: Rational,
    pub finite: Rational,
}

impl CostValue {
    pub fn zero() -> Self {
        CostValue::default()
    }

    pub fn finite(c: Rational) -> Self {
        CostValue { infinite_units: Rational::zero(), finite: c }
    }

    /// The per-unit cost of the reduction edge: one unit of minus infinity.
    pub fn minus_infinity() -> Self {
        CostValue { infinite_units: Rational::from_integer(-1), finite: Rational::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.infinite_units.is_zero() && self.finite.is_zero()
    }

    pub fn scale(&self, k: &Rational) -> Self {
        CostValue { infinite_units: &self.infinite_units * k, finite: &self.finite * k }
    }
}

impl Ord for CostValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.infinite_units
            .cmp(&other.infinite_units)
            .then_with(|| self.finite.cmp(&other.finite))
    }
}

impl PartialOrd for CostValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CostValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.infinite_units.is_zero() {
            write!(f, "{}", self.finite)
        } else if self.finite.is_negative() {
            write!(f, "{}*inf{}", self.infinite_units, self.finite)
        } else {
            write!(f, "{}*inf+{}", self.infinite_units, self.finite)
        }
    }
}

impl Add<&CostValue> for &CostValue {
    type Output = CostValue;
    fn add(self, rhs: &CostValue) -> CostValue {
        CostValue {
            infinite_units: &self.infinite_units + &rhs.infinite_units,
            finite: &self.finite + &rhs.finite,
        }
    }
}

impl Add for CostValue {
    type Output = CostValue;
    fn add(self, rhs: CostValue) -> CostValue {
        &self + &rhs
    }
}

impl AddAssign<&CostValue> for CostValue {
    fn add_assign(&mut self, rhs: &CostValue) {
        self.infinite_units += &rhs.infinite_units;
        self.finite += &rhs.finite;
    }
}

impl Sub<&CostValue> for &CostValue {
    type Output = CostValue;
    fn sub(self, rhs: &CostValue) -> CostValue {
        CostValue {
            infinite_units: &self.infinite_units - &rhs.infinite_units,
            finite: &self.finite - &rhs.finite,
        }
    }
}

impl Sub for CostValue {
    type Output = CostValue;
    fn sub(self, rhs: CostValue) -> CostValue {
        &self - &rhs
    }
}

impl Neg for &CostValue {
    type Output = CostValue;
    fn neg(self) -> CostValue {
        CostValue { infinite_units: -&self.infinite_units, finite: -&self.finite }
    }
}

impl Neg for CostValue {
    type Output = CostValue;
    fn neg(self) -> CostValue {
        -&self
    }
}

/// An edge traversed either tail→head (`forward`) or head→tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DirectedEdgeRef {
    pub edge_id: usize,
    pub forward: bool,
}

impl DirectedEdgeRef {
    pub fn forward(edge_id: usize) -> Self {
        DirectedEdgeRef { edge_id, forward: true }
    }

    pub fn reverse(edge_id: usize) -> Self {
        DirectedEdgeRef { edge_id, forward: false }
    }

    pub fn flipped(self) -> Self {
        DirectedEdgeRef { edge_id: self.edge_id, forward: !self.forward }
    }
}

/// Which of the two flows held by a [`FlowState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    /// The fractional input `f`.
    Original,
    /// The flow `f'` being rounded.
    Working,
}

/// A graph with an original flow, a working flow, and optional per-unit costs.
///
/// Only the tail→head value of each edge is stored; the reverse direction is
/// its negation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowState {
    graph: Graph,
    original: Vec<Rational>,
    working: Vec<Rational>,
    costs: Option<Vec<CostValue>>,
    protected: Vec<bool>,
}

impl FlowState {
    /// Creates a state whose working flow starts equal to `flows`.
    pub fn new(graph: Graph, flows: Vec<Rational>, costs: Option<Vec<CostValue>>) -> Result<Self> {
        let m = graph.edge_count();
        if flows.len() != m {
            return Err(FlowError::GraphMismatch(format!(
                "{} flow values for {} edges",
                flows.len(),
                m
            )));
        }
        if let Some(c) = &costs {
            if c.len() != m {
                return Err(FlowError::GraphMismatch(format!("{} costs for {} edges", c.len(), m)));
            }
        }
        Ok(FlowState {
            graph,
            working: flows.clone(),
            original: flows,
            costs,
            protected: vec![false; m],
        })
    }

    /// Convenience constructor from `(tail, head, flow)` triples.
    pub fn from_triples(node_count: usize, edges: &[(usize, usize, Rational)]) -> Result<Self> {
        let pairs: Vec<_> = edges.iter().map(|(t, h, _)| (*t, *h)).collect();
        let graph = Graph::from_edges(node_count, &pairs)?;
        FlowState::new(graph, edges.iter().map(|e| e.2.clone()).collect(), None)
    }

    pub fn with_costs(mut self, costs: Vec<CostValue>) -> Result<Self> {
        if costs.len() != self.graph.edge_count() {
            return Err(FlowError::GraphMismatch(format!(
                "{} costs for {} edges",
                costs.len(),
                self.graph.edge_count()
            )));
        }
        self.costs = Some(costs);
        Ok(self)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.graph.edge(e)
    }

    pub fn original(&self, e: usize) -> &Rational {
        &self.original[e]
    }

    pub fn working(&self, e: usize) -> &Rational {
        &self.working[e]
    }

    pub fn originals(&self) -> &[Rational] {
        &self.original
    }

    pub fn workings(&self) -> &[Rational] {
        &self.working
    }

    pub fn flow(&self, e: usize, which: FlowKind) -> &Rational {
        match which {
            FlowKind::Original => &self.original[e],
            FlowKind::Working => &self.working[e],
        }
    }

    pub fn set_working(&mut self, e: usize, value: Rational) {
        self.working[e] = value;
    }

    /// Replaces the whole working flow; `values` must have one entry per edge.
    pub fn set_workings(&mut self, values: Vec<Rational>) -> Result<()> {
        if values.len() != self.edge_count() {
            return Err(FlowError::GraphMismatch(format!(
                "{} flow values for {} edges",
                values.len(),
                self.edge_count()
            )));
        }
        self.working = values;
        Ok(())
    }

    /// Pushes `amount` units along `dir`.
    pub fn push(&mut self, dir: DirectedEdgeRef, amount: &Rational) {
        let f = &mut self.working[dir.edge_id];
        if dir.forward {
            *f += amount;
        } else {
            *f -= amount;
        }
    }

    pub fn has_costs(&self) -> bool {
        self.costs.is_some()
    }

    pub fn costs(&self) -> Option<&[CostValue]> {
        self.costs.as_deref()
    }

    /// Per-unit cost of `dir` (negated for reverse references); zero when the
    /// state carries no costs.
    pub fn directed_cost(&self, dir: DirectedEdgeRef) -> CostValue {
        match &self.costs {
            Some(c) if dir.forward => c[dir.edge_id].clone(),
            Some(c) => -&c[dir.edge_id],
            None => CostValue::zero(),
        }
    }

    pub fn is_protected(&self, e: usize) -> bool {
        self.protected[e]
    }

    pub fn protected_edges(&self) -> Vec<usize> {
        (0..self.edge_count()).filter(|&e| self.protected[e]).collect()
    }

    /// `ceil(f(dir)) - f'(dir)` with reverse directions using negated flows.
    pub fn availability(&self, dir: DirectedEdgeRef) -> Rational {
        let f0 = &self.original[dir.edge_id];
        let f1 = &self.working[dir.edge_id];
        if dir.forward {
            f0.ceil() - f1
        } else {
            (-f0).ceil() + f1
        }
    }

    /// Inflow minus outflow at `v`; self-loops contribute nothing.
    pub fn net_flow(&self, v: usize, which: FlowKind) -> Rational {
        let flows = match which {
            FlowKind::Original => &self.original,
            FlowKind::Working => &self.working,
        };
        let mut net = Rational::zero();
        for (id, e) in self.graph.edges().iter().enumerate() {
            if e.is_self_loop() {
                continue;
            }
            if e.head == v {
                net += &flows[id];
            }
            if e.tail == v {
                net -= &flows[id];
            }
        }
        net
    }

    /// Net flow at every node in one pass.
    pub fn net_flows(&self, which: FlowKind) -> Vec<Rational> {
        let flows = match which {
            FlowKind::Original => &self.original,
            FlowKind::Working => &self.working,
        };
        let mut net = vec![Rational::zero(); self.node_count()];
        for (id, e) in self.graph.edges().iter().enumerate() {
            if e.is_self_loop() {
                continue;
            }
            net[e.head] += &flows[id];
            net[e.tail] -= &flows[id];
        }
        net
    }

    /// Fails with the first node whose net flow is nonzero.
    pub fn check_circulation(&self, which: FlowKind) -> Result<()> {
        match self.net_flows(which).into_iter().enumerate().find(|(_, x)| !x.is_zero()) {
            Some((node, net)) => Err(FlowError::NotACirculation { node, net }),
            None => Ok(()),
        }
    }

    /// Edges whose working flow is not an integer, ascending.
    pub fn fractional_edges(&self) -> Vec<usize> {
        (0..self.edge_count()).filter(|&e| !self.working[e].is_integral()).collect()
    }

    pub fn is_integral(&self) -> bool {
        self.working.iter().all(Rational::is_integral)
    }

    /// Exact `sum_e cost(e) * flow(e)`.
    pub fn total_cost(&self, which: FlowKind) -> Result<CostValue> {
        let costs = self.costs.as_ref().ok_or(FlowError::MissingCosts)?;
        let mut total = CostValue::zero();
        for (e, c) in costs.iter().enumerate() {
            let f = self.flow(e, which);
            if !f.is_zero() {
                total += &c.scale(f);
            }
        }
        Ok(total)
    }

    /// Appends a protected edge carrying `flow` in both original and working.
    pub(crate) fn push_protected_edge(
        &mut self,
        tail: usize,
        head: usize,
        flow: Rational,
        cost: Option<CostValue>,
    ) -> Result<usize> {
        let id = self.graph.add_edge(tail, head)?;
        self.original.push(flow.clone());
        self.working.push(flow);
        self.protected.push(true);
        if let Some(costs) = &mut self.costs {
            costs.push(cost.unwrap_or_default());
        }
        Ok(id)
    }

    /// Removes the last edge, which must be the only protected one.
    pub(crate) fn pop_protected_edge(&mut self) -> Result<(Edge, Rational)> {
        let protected = self.protected_edges();
        if protected.len() != 1 || protected[0] + 1 != self.edge_count() {
            return Err(FlowError::ProtectedEdgeCount(protected.len()));
        }
        let edge = self.graph.remove_last_edge().expect("protected edge exists");
        self.original.pop();
        let flow = self.working.pop().expect("protected edge exists");
        self.protected.pop();
        if let Some(costs) = &mut self.costs {
            costs.pop();
        }
        Ok((edge, flow))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn triangle_half() -> FlowState {
        let h = q("1/2");
        FlowState::from_triples(3, &[(0, 1, h.clone()), (1, 2, h.clone()), (2, 0, h)]).unwrap()
    }

    #[test]
    fn availability_worked_example() {
        let s = FlowState::from_triples(2, &[(0, 1, q("1.7"))]).unwrap();
        assert_eq!(s.availability(DirectedEdgeRef::forward(0)), q("3/10"));
        assert_eq!(s.availability(DirectedEdgeRef::reverse(0)), q("7/10"));
        let s = FlowState::from_triples(2, &[(0, 1, q("2"))]).unwrap();
        assert!(s.availability(DirectedEdgeRef::forward(0)).is_zero());
        assert!(s.availability(DirectedEdgeRef::reverse(0)).is_zero());
    }

    #[test]
    fn net_flow_examples() {
        let single = FlowState::from_triples(1, &[]).unwrap();
        assert!(single.net_flow(0, FlowKind::Original).is_zero());
        assert!(triangle_half().net_flow(1, FlowKind::Original).is_zero());
        let path = FlowState::from_triples(2, &[(0, 1, q("1/2"))]).unwrap();
        assert_eq!(path.net_flow(1, FlowKind::Original), q("1/2"));
        let looped = FlowState::from_triples(1, &[(0, 0, q("5/3"))]).unwrap();
        assert!(looped.net_flow(0, FlowKind::Working).is_zero());
    }

    #[test]
    fn fractional_edge_set() {
        let s = FlowState::from_triples(2, &[(0, 1, q("3")), (1, 0, q("3"))]).unwrap();
        assert!(s.fractional_edges().is_empty());
        assert_eq!(triangle_half().fractional_edges(), vec![0, 1, 2]);
        let s = FlowState::from_triples(2, &[(0, 1, q("1/2")), (0, 1, q("3"))]).unwrap();
        assert_eq!(s.fractional_edges(), vec![0]);
    }

    #[test]
    fn total_cost_examples() {
        let empty = FlowState::from_triples(0, &[]).unwrap().with_costs(vec![]).unwrap();
        assert_eq!(empty.total_cost(FlowKind::Original).unwrap(), CostValue::zero());
        let tri = triangle_half()
            .with_costs(vec![CostValue::finite(Rational::one()); 3])
            .unwrap();
        assert_eq!(tri.total_cost(FlowKind::Original).unwrap(), CostValue::finite(q("3/2")));
        let red = FlowState::from_triples(2, &[(1, 0, q("2"))])
            .unwrap()
            .with_costs(vec![CostValue::minus_infinity()])
            .unwrap();
        let c = red.total_cost(FlowKind::Original).unwrap();
        assert_eq!(c.infinite_units, q("-2"));
        assert!(c.finite.is_zero());
        assert_eq!(
            triangle_half().total_cost(FlowKind::Original),
            Err(FlowError::MissingCosts)
        );
    }

    #[test]
    fn cost_order_is_lexicographic() {
        let inf = CostValue { infinite_units: q("-1"), finite: q("5") };
        assert!(inf < CostValue::finite(q("-1000000")));
        assert!(CostValue::finite(q("1")) > CostValue::zero());
        assert_eq!(inf.to_string(), "-1*inf+5");
    }

    #[test]
    fn availability_pair_sums_to_fractionality() {
        for s in ["17/10", "-17/10", "3", "0", "-1/3"] {
            let st = FlowState::from_triples(2, &[(0, 1, q(s))]).unwrap();
            let total = st.availability(DirectedEdgeRef::forward(0))
                + st.availability(DirectedEdgeRef::reverse(0));
            let expect = if q(s).is_integral() { Rational::zero() } else { Rational::one() };
            assert_eq!(total, expect, "flow {s}");
        }
    }
}
