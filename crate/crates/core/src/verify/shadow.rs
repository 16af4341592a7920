use std::fmt;

use crate::error::{FlowError, Result};
use crate::graph::CostValue;
use crate::linkcut::{DynTree, EdgePayload};
use crate::policy::RngState;
use crate::rational::Rational;

/// Explicit parent-array forest with the same observable behavior as
/// [`DynTree`], including which node is the root of each tree.
#[derive(Debug, Clone)]
pub struct NaiveForest {
    /// Parent and the edge payload oriented parent→child.
    parent: Vec<Option<(usize, EdgePayload)>>,
}

/// One step of a path: the child endpoint of the edge and whether the walk
/// goes parent→child.
type Step = (usize, bool);

impl NaiveForest {
    pub fn new(n: usize) -> Self {
        NaiveForest { parent: vec![None; n] }
    }

    fn check(&self, v: usize) -> Result<()> {
        if v < self.parent.len() {
            Ok(())
        } else {
            Err(FlowError::InvalidNode { node: v, node_count: self.parent.len() })
        }
    }

    fn ancestors(&self, v: usize) -> Vec<usize> {
        let mut out = vec![v];
        let mut cur = v;
        while let Some((p, _)) = &self.parent[cur] {
            out.push(*p);
            cur = *p;
        }
        out
    }

    pub fn find_root(&self, v: usize) -> Result<usize> {
        self.check(v)?;
        Ok(*self.ancestors(v).last().expect("nonempty"))
    }

    pub fn connected(&self, u: usize, v: usize) -> Result<bool> {
        Ok(self.find_root(u)? == self.find_root(v)?)
    }

    pub fn evert(&mut self, v: usize) -> Result<()> {
        self.check(v)?;
        let path = self.ancestors(v);
        let old: Vec<_> = path.iter().map(|&w| self.parent[w].take()).collect();
        for (i, entry) in old.into_iter().enumerate() {
            if let Some((p, payload)) = entry {
                self.parent[p] = Some((path[i], payload.reversed()));
            }
        }
        Ok(())
    }

    pub fn tree_size(&self, v: usize) -> Result<usize> {
        let r = self.find_root(v)?;
        Ok((0..self.parent.len()).filter(|&w| self.find_root(w).ok() == Some(r)).count())
    }

    pub fn link(&mut self, u: usize, v: usize, payload: EdgePayload) -> Result<()> {
        self.check(u)?;
        self.check(v)?;
        if u == v || self.connected(u, v)? {
            return Err(FlowError::SameTree { u, v });
        }
        self.evert(v)?;
        self.parent[v] = Some((u, payload));
        Ok(())
    }

    pub fn cut(&mut self, u: usize, v: usize) -> Result<EdgePayload> {
        self.check(u)?;
        self.check(v)?;
        if matches!(&self.parent[u], Some((p, _)) if *p == v) {
            let (_, payload) = self.parent[u].take().expect("checked");
            return Ok(payload.reversed());
        }
        if matches!(&self.parent[v], Some((p, _)) if *p == u) {
            let (_, payload) = self.parent[v].take().expect("checked");
            return Ok(payload);
        }
        Err(FlowError::NoSuchEdge { u, v })
    }

    /// Edges from `u` to `v` in walking order.
    fn path(&self, u: usize, v: usize) -> Result<Vec<Step>> {
        self.check(u)?;
        self.check(v)?;
        let au = self.ancestors(u);
        let av = self.ancestors(v);
        if au.last() != av.last() {
            return Err(FlowError::NotConnected { u, v });
        }
        let (mut i, mut j) = (au.len(), av.len());
        while i > 0 && j > 0 && au[i - 1] == av[j - 1] {
            i -= 1;
            j -= 1;
        }
        let mut steps: Vec<Step> = au[..i].iter().map(|&c| (c, false)).collect();
        steps.extend(av[..j].iter().rev().map(|&c| (c, true)));
        Ok(steps)
    }

    fn payload(&self, child: usize) -> &EdgePayload {
        &self.parent[child].as_ref().expect("path edge").1
    }

    fn avail(&self, (child, down): Step) -> &Rational {
        let p = self.payload(child);
        if down {
            &p.down
        } else {
            &p.up
        }
    }

    pub fn path_min(&self, u: usize, v: usize) -> Result<(usize, Rational)> {
        if u == v {
            self.check(u)?;
            return Err(FlowError::SameNode(u));
        }
        let mut best: Option<(usize, Rational)> = None;
        for step in self.path(u, v)? {
            let a = self.avail(step);
            if best.as_ref().is_none_or(|(_, b)| a < b) {
                best = Some((self.payload(step.0).edge_id, a.clone()));
            }
        }
        Ok(best.expect("distinct connected nodes share an edge"))
    }

    pub fn path_sum(&self, u: usize, v: usize) -> Result<CostValue> {
        let mut total = CostValue::zero();
        for (child, down) in self.path(u, v)? {
            let c = &self.payload(child).cost_down;
            if down {
                total += c;
            } else {
                total += &-c;
            }
        }
        Ok(total)
    }

    pub fn path_add(&mut self, u: usize, v: usize, delta: &Rational) -> Result<()> {
        let steps = self.path(u, v)?;
        for &(child, down) in &steps {
            let p = self.payload(child);
            let (fwd, back) = if down { (&p.down, &p.up) } else { (&p.up, &p.down) };
            if fwd < delta || (back + delta).is_negative() {
                return Err(FlowError::NegativeAvailability { u, v, delta: delta.clone() });
            }
        }
        for (child, down) in steps {
            let p = &mut self.parent[child].as_mut().expect("path edge").1;
            if down {
                p.down -= delta;
                p.up += delta;
            } else {
                p.up -= delta;
                p.down += delta;
            }
        }
        Ok(())
    }

    /// Current edges as sorted `(min, max)` endpoint pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = self
            .parent
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.as_ref().map(|(p, _)| (c.min(*p), c.max(*p))))
            .collect();
        out.sort_unstable();
        out
    }
}

/// First disagreement between [`DynTree`] and [`NaiveForest`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub op_index: u64,
    pub op: String,
    pub expected: String,
    pub actual: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "op {} `{}`: shadow gave {}, tree gave {}", self.op_index, self.op, self.expected, self.actual)
    }
}

/// Runs `op_count` random operations against both structures and compares
/// every result. Returns the number of compared results.
pub fn shadow_tree_suite(op_count: u64, seed: u64) -> std::result::Result<u64, Divergence> {
    Harness::new(seed).run(op_count, None)
}

/// Like [`shadow_tree_suite`], but skews one stored availability in the
/// dynamic tree just before operation `fault_at`.
pub fn shadow_tree_suite_with_fault(op_count: u64, seed: u64, fault_at: u64) -> std::result::Result<u64, Divergence> {
    Harness::new(seed).run(op_count, Some(fault_at))
}

const NODES: usize = 40;

struct Harness {
    rng: RngState,
    tree: DynTree,
    shadow: NaiveForest,
    next_edge_id: usize,
    compared: u64,
}

impl Harness {
    fn new(seed: u64) -> Self {
        Harness {
            rng: RngState::new(seed),
            tree: DynTree::new(NODES),
            shadow: NaiveForest::new(NODES),
            next_edge_id: 0,
            compared: 0,
        }
    }

    fn pick(&mut self, bound: usize) -> usize {
        self.rng.below_u64(bound as u64) as usize
    }

    fn payload(&mut self) -> EdgePayload {
        let den = [2, 3, 4, 5, 10][self.pick(5)];
        let num = 1 + self.pick(den as usize - 1) as i64;
        let down = Rational::new(num, den);
        let up = Rational::one() - &down;
        let finite = Rational::from_integer(self.pick(11) as i64 - 5);
        let infinite_units = Rational::from_integer(if self.pick(20) == 0 { -1 } else { 0 });
        self.next_edge_id += 1;
        EdgePayload { edge_id: self.next_edge_id, down, up, cost_down: CostValue { infinite_units, finite } }
    }

    /// A node in the tree of `u` most of the time, otherwise any node.
    fn partner(&mut self, u: usize) -> usize {
        if self.pick(5) == 0 {
            return self.pick(NODES);
        }
        let r = self.shadow.find_root(u).expect("valid");
        let same: Vec<usize> = (0..NODES).filter(|&w| self.shadow.find_root(w).ok() == Some(r)).collect();
        same[self.pick(same.len())]
    }

    fn compare<T: fmt::Debug + PartialEq>(
        &mut self,
        i: u64,
        op: impl FnOnce() -> String,
        expected: T,
        actual: T,
    ) -> std::result::Result<(), Divergence> {
        self.compared += 1;
        if expected == actual {
            Ok(())
        } else {
            Err(Divergence { op_index: i, op: op(), expected: format!("{expected:?}"), actual: format!("{actual:?}") })
        }
    }

    fn run(mut self, op_count: u64, fault_at: Option<u64>) -> std::result::Result<u64, Divergence> {
        for i in 0..op_count {
            if fault_at == Some(i) {
                let edges = self.shadow.edges();
                if let Some(&(u, v)) = edges.first() {
                    self.tree.corrupt_edge_for_testing(u, v, &Rational::new(1, 7)).expect("edge exists");
                }
            }
            let u = self.pick(NODES);
            match self.pick(100) {
                0..=24 => {
                    let v = self.pick(NODES);
                    let p = self.payload();
                    let e = self.shadow.link(u, v, p.clone());
                    let a = self.tree.link(u, v, p);
                    self.compare(i, || format!("link {u} {v}"), e, a)?;
                }
                25..=36 => {
                    let edges = self.shadow.edges();
                    let (a, b) = if edges.is_empty() || self.pick(10) == 0 {
                        (u, self.pick(NODES))
                    } else {
                        let (a, b) = edges[self.pick(edges.len())];
                        if self.pick(2) == 0 {
                            (a, b)
                        } else {
                            (b, a)
                        }
                    };
                    let e = self.shadow.cut(a, b);
                    let t = self.tree.cut(a, b);
                    self.compare(i, || format!("cut {a} {b}"), e, t)?;
                }
                37..=46 => {
                    let e = self.shadow.find_root(u);
                    let a = self.tree.find_root(u);
                    self.compare(i, || format!("find_root {u}"), e, a)?;
                }
                47..=51 => {
                    let e = self.shadow.evert(u);
                    let a = self.tree.evert(u);
                    self.compare(i, || format!("evert {u}"), e, a)?;
                }
                52..=66 => {
                    let v = self.partner(u);
                    let e = self.shadow.path_min(u, v);
                    let a = self.tree.path_min(u, v);
                    self.compare(i, || format!("path_min {u} {v}"), e, a)?;
                }
                67..=76 => {
                    let v = self.partner(u);
                    let e = self.shadow.path_sum(u, v);
                    let a = self.tree.path_sum(u, v);
                    self.compare(i, || format!("path_sum {u} {v}"), e, a)?;
                }
                77..=91 => {
                    let v = self.partner(u);
                    let limit = self.shadow.path_min(u, v).map(|(_, m)| m).unwrap_or_else(|_| Rational::zero());
                    let delta = match self.pick(5) {
                        0 => Rational::zero(),
                        1 => limit.clone(),
                        2 => &limit / &Rational::from_integer(2),
                        3 => &limit + &Rational::new(1, 10),
                        _ => -&Rational::new(self.pick(3) as i64, 4),
                    };
                    let e = self.shadow.path_add(u, v, &delta);
                    let a = self.tree.path_add(u, v, &delta);
                    self.compare(i, || format!("path_add {u} {v} {delta}"), e, a)?;
                }
                92..=96 => {
                    let e = self.shadow.tree_size(u);
                    let a = self.tree.tree_size(u);
                    self.compare(i, || format!("tree_size {u}"), e, a)?;
                }
                _ => {
                    let v = self.pick(NODES);
                    let e = self.shadow.connected(u, v);
                    let a = self.tree.connected(u, v);
                    self.compare(i, || format!("connected {u} {v}"), e, a)?;
                }
            }
        }
        // final sweep: every edge's weights must still agree
        let e = self.shadow.edges();
        let a = self.tree.edges();
        self.compare(op_count, || "edges".into(), e.clone(), a)?;
        for (u, v) in e {
            let pe = self.shadow.cut(u, v);
            let pa = self.tree.cut(u, v);
            self.compare(op_count, || format!("final cut {u} {v}"), pe, pa)?;
        }
        Ok(self.compared)
    }
}
