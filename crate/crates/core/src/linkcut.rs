//! Dynamic forest over a fixed set of vertices with per-edge availabilities.
//!
//! This is a splay-based link/cut tree. Every forest edge is its own splay
//! node sitting between its two endpoints, so edge payloads become node
//! payloads. Inside a splay tree the in-order sequence runs from the shallow
//! end of a preferred path to the deep end; an edge node stores its
//! availability in that left-to-right direction (`lr`) and the opposite one
//! (`rl`), plus its per-unit cost left-to-right.
//!
//! Aggregates keep the leftmost minimum of `lr` and the rightmost minimum of
//! `rl`, so a reversal (swap the two) still reports the tie closest to the
//! left end. A single pending tag `t` means "add `t` to every `lr` below,
//! subtract it from every `rl`", since a push moves both directions by the
//! same amount.
//!
//! Public operations keep the rooted shape stable: path operations evert
//! internally and restore the previous root before returning. Only
//! [`DynTree::link`] (which makes `v` the root of its tree before hanging it
//! under `u`) and [`DynTree::evert`] change roots.

use std::collections::HashMap;
use std::mem;

use crate::error::{FlowError, Result};
use crate::graph::CostValue;
use crate::rational::Rational;

const NIL: usize = usize::MAX;

/// Weights of one forest edge, oriented from the first node given to
/// [`DynTree::link`] or [`DynTree::cut`] towards the second.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgePayload {
    pub edge_id: usize,
    /// Availability in the u→v direction.
    pub down: Rational,
    /// Availability in the v→u direction.
    pub up: Rational,
    /// Per-unit cost in the u→v direction; the reverse cost is its negation.
    pub cost_down: CostValue,
}

impl EdgePayload {
    /// The same edge seen from the other endpoint.
    pub fn reversed(self) -> Self {
        EdgePayload { edge_id: self.edge_id, down: self.up, up: self.down, cost_down: -self.cost_down }
    }
}

/// Instrumentation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TreeCounters {
    /// Public operations (link, cut, find_root, evert, path queries).
    pub ops: u64,
    pub splays: u64,
    pub rotations: u64,
}

#[derive(Debug, Clone)]
struct EdgeData {
    id: usize,
    lr: Rational,
    rl: Rational,
    cost_lr: CostValue,
}

#[derive(Debug, Clone)]
struct Node {
    ch: [usize; 2],
    parent: usize,
    rev: bool,
    tag: Rational,
    edge: Option<EdgeData>,
    min_lr: Option<(Rational, usize)>,
    min_rl: Option<(Rational, usize)>,
    cost: CostValue,
    /// Vertices in this splay subtree plus everything hanging off it.
    size: usize,
    /// Vertices in virtual (path-parent) children.
    virtual_size: usize,
    vertex: bool,
}

impl Node {
    fn vertex() -> Self {
        Node {
            ch: [NIL; 2],
            parent: NIL,
            rev: false,
            tag: Rational::zero(),
            edge: None,
            min_lr: None,
            min_rl: None,
            cost: CostValue::zero(),
            size: 1,
            virtual_size: 0,
            vertex: true,
        }
    }

    fn edge(data: EdgeData) -> Self {
        Node {
            min_lr: Some((data.lr.clone(), data.id)),
            min_rl: Some((data.rl.clone(), data.id)),
            cost: data.cost_lr.clone(),
            edge: Some(data),
            size: 0,
            vertex: false,
            ..Node::vertex()
        }
    }
}

/// A forest of rooted trees supporting link, cut, root finding and
/// directional path add/min/sum.
#[derive(Debug, Clone)]
pub struct DynTree {
    nodes: Vec<Node>,
    vertex_count: usize,
    free: Vec<usize>,
    edge_nodes: HashMap<(usize, usize), usize>,
    counters: TreeCounters,
    stack: Vec<usize>,
}

fn key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl DynTree {
    pub fn new(vertex_count: usize) -> Self {
        DynTree {
            nodes: (0..vertex_count).map(|_| Node::vertex()).collect(),
            vertex_count,
            free: Vec::new(),
            edge_nodes: HashMap::new(),
            counters: TreeCounters::default(),
            stack: Vec::new(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_nodes.len()
    }

    pub fn counters(&self) -> TreeCounters {
        self.counters
    }

    /// Forest edges as `(min endpoint, max endpoint)` pairs, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = self.edge_nodes.keys().copied().collect();
        out.sort_unstable();
        out
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_nodes.contains_key(&key(u, v))
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.vertex_count {
            Ok(())
        } else {
            Err(FlowError::InvalidNode { node: v, node_count: self.vertex_count })
        }
    }

    // ---- splay machinery -------------------------------------------------

    fn is_splay_root(&self, x: usize) -> bool {
        let p = self.nodes[x].parent;
        p == NIL || (self.nodes[p].ch[0] != x && self.nodes[p].ch[1] != x)
    }

    fn size_of(&self, x: usize) -> usize {
        if x == NIL {
            0
        } else {
            self.nodes[x].size
        }
    }

    fn apply_rev(&mut self, x: usize) {
        if x == NIL {
            return;
        }
        let n = &mut self.nodes[x];
        n.ch.swap(0, 1);
        if let Some(e) = &mut n.edge {
            mem::swap(&mut e.lr, &mut e.rl);
            e.cost_lr = -&e.cost_lr;
        }
        mem::swap(&mut n.min_lr, &mut n.min_rl);
        n.cost = -&n.cost;
        n.rev = !n.rev;
        n.tag = -&n.tag;
    }

    fn apply_add(&mut self, x: usize, t: &Rational) {
        if x == NIL {
            return;
        }
        let n = &mut self.nodes[x];
        if let Some(e) = &mut n.edge {
            e.lr += t;
            e.rl -= t;
        }
        if let Some((v, _)) = &mut n.min_lr {
            *v += t;
        }
        if let Some((v, _)) = &mut n.min_rl {
            *v -= t;
        }
        n.tag += t;
    }

    fn push(&mut self, x: usize) {
        let [l, r] = self.nodes[x].ch;
        if self.nodes[x].rev {
            self.apply_rev(l);
            self.apply_rev(r);
            self.nodes[x].rev = false;
        }
        if !self.nodes[x].tag.is_zero() {
            let t = mem::take(&mut self.nodes[x].tag);
            self.apply_add(l, &t);
            self.apply_add(r, &t);
        }
    }

    fn pull(&mut self, x: usize) {
        fn agg(m: &Option<(Rational, usize)>) -> Option<(&Rational, usize)> {
            m.as_ref().map(|(v, id)| (v, *id))
        }
        let [l, r] = self.nodes[x].ch;
        let nodes = &self.nodes;
        let kids = [l, r].map(|c| (c != NIL).then(|| &nodes[c]));
        let own = nodes[x].edge.as_ref();
        let own_lr = own.map(|e| (&e.lr, e.id));
        let own_rl = own.map(|e| (&e.rl, e.id));
        let mut min_lr: Option<(&Rational, usize)> = None;
        let mut min_rl: Option<(&Rational, usize)> = None;
        for (clr, crl) in [
            (kids[0].and_then(|n| agg(&n.min_lr)), kids[0].and_then(|n| agg(&n.min_rl))),
            (own_lr, own_rl),
            (kids[1].and_then(|n| agg(&n.min_lr)), kids[1].and_then(|n| agg(&n.min_rl))),
        ] {
            if let Some(c) = clr {
                // strictly smaller: earliest (leftmost) tie wins
                if min_lr.is_none_or(|m| c.0 < m.0) {
                    min_lr = Some(c);
                }
            }
            if let Some(c) = crl {
                // smaller or equal: latest (rightmost) tie wins
                if min_rl.is_none_or(|m| c.0 <= m.0) {
                    min_rl = Some(c);
                }
            }
        }
        let mut cost = own.map_or_else(CostValue::zero, |e| e.cost_lr.clone());
        for k in kids.into_iter().flatten() {
            if !k.cost.is_zero() {
                cost += &k.cost;
            }
        }
        let min_lr = min_lr.map(|(v, id)| (v.clone(), id));
        let min_rl = min_rl.map(|(v, id)| (v.clone(), id));
        let size =
            nodes[x].virtual_size + usize::from(nodes[x].vertex) + kids.into_iter().flatten().map(|k| k.size).sum::<usize>();
        let n = &mut self.nodes[x];
        n.min_lr = min_lr;
        n.min_rl = min_rl;
        n.cost = cost;
        n.size = size;
    }

    fn rotate(&mut self, x: usize) {
        self.counters.rotations += 1;
        let p = self.nodes[x].parent;
        let g = self.nodes[p].parent;
        let dir = usize::from(self.nodes[p].ch[1] == x);
        let b = self.nodes[x].ch[dir ^ 1];
        if !self.is_splay_root(p) {
            let gd = usize::from(self.nodes[g].ch[1] == p);
            self.nodes[g].ch[gd] = x;
        }
        self.nodes[x].parent = g;
        self.nodes[x].ch[dir ^ 1] = p;
        self.nodes[p].parent = x;
        self.nodes[p].ch[dir] = b;
        if b != NIL {
            self.nodes[b].parent = p;
        }
        self.pull(p);
        self.pull(x);
    }

    fn splay(&mut self, x: usize) {
        self.counters.splays += 1;
        let mut stack = mem::take(&mut self.stack);
        stack.clear();
        let mut y = x;
        stack.push(y);
        while !self.is_splay_root(y) {
            y = self.nodes[y].parent;
            stack.push(y);
        }
        while let Some(y) = stack.pop() {
            self.push(y);
        }
        self.stack = stack;
        while !self.is_splay_root(x) {
            let p = self.nodes[x].parent;
            if !self.is_splay_root(p) {
                let g = self.nodes[p].parent;
                let zigzig = (self.nodes[g].ch[0] == p) == (self.nodes[p].ch[0] == x);
                if zigzig {
                    self.rotate(p);
                } else {
                    self.rotate(x);
                }
            }
            self.rotate(x);
        }
    }

    /// Makes the root-to-`x` path preferred and splays `x` to its top.
    fn access(&mut self, x: usize) {
        let mut last = NIL;
        let mut y = x;
        while y != NIL {
            self.splay(y);
            let old = self.nodes[y].ch[1];
            let gained = self.size_of(old);
            let lost = self.size_of(last);
            let n = &mut self.nodes[y];
            n.virtual_size = n.virtual_size + gained - lost;
            n.ch[1] = last;
            self.pull(y);
            last = y;
            y = self.nodes[y].parent;
        }
        self.splay(x);
    }

    fn evert_raw(&mut self, x: usize) {
        self.access(x);
        self.apply_rev(x);
    }

    fn root_raw(&mut self, x: usize) -> usize {
        self.access(x);
        let mut y = x;
        loop {
            self.push(y);
            let l = self.nodes[y].ch[0];
            if l == NIL {
                break;
            }
            y = l;
        }
        self.splay(y);
        y
    }

    /// Represented-tree parent of `x` (a vertex or edge node), if any.
    fn parent_raw(&mut self, x: usize) -> Option<usize> {
        self.access(x);
        self.push(x);
        let mut y = self.nodes[x].ch[0];
        if y == NIL {
            return None;
        }
        loop {
            self.push(y);
            let r = self.nodes[y].ch[1];
            if r == NIL {
                break;
            }
            y = r;
        }
        self.splay(y);
        Some(y)
    }

    /// Detaches `c` from its represented-tree parent.
    fn cut_parent_raw(&mut self, c: usize) {
        self.access(c);
        let l = self.nodes[c].ch[0];
        debug_assert!(l != NIL, "cut_parent on a root");
        self.nodes[l].parent = NIL;
        self.nodes[c].ch[0] = NIL;
        self.pull(c);
    }

    /// Hangs tree root `c` under `p` as a virtual child.
    fn attach_raw(&mut self, c: usize, p: usize) {
        self.access(c);
        self.access(p);
        let csize = self.nodes[c].size;
        self.nodes[c].parent = p;
        self.nodes[p].virtual_size += csize;
        self.pull(p);
    }

    fn alloc_edge(&mut self, data: EdgeData) -> usize {
        let node = Node::edge(data);
        if let Some(i) = self.free.pop() {
            self.nodes[i] = node;
            i
        } else {
            self.nodes.push(node);
            self.nodes.len() - 1
        }
    }

    /// Evert `u`, expose the `u..v` path and return the previous root.
    fn expose(&mut self, u: usize, v: usize) -> Result<usize> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        let r = self.root_raw(u);
        if self.root_raw(v) != r {
            return Err(FlowError::NotConnected { u, v });
        }
        self.evert_raw(u);
        self.access(v);
        Ok(r)
    }

    // ---- public operations ----------------------------------------------

    /// Root of the tree containing `v`.
    pub fn find_root(&mut self, v: usize) -> Result<usize> {
        self.check_vertex(v)?;
        self.counters.ops += 1;
        Ok(self.root_raw(v))
    }

    pub fn connected(&mut self, u: usize, v: usize) -> Result<bool> {
        Ok(self.find_root(u)? == self.find_root(v)?)
    }

    /// Makes `v` the root of its tree.
    pub fn evert(&mut self, v: usize) -> Result<()> {
        self.check_vertex(v)?;
        self.counters.ops += 1;
        self.evert_raw(v);
        Ok(())
    }

    /// Number of vertices in the tree containing `v`.
    pub fn tree_size(&mut self, v: usize) -> Result<usize> {
        self.check_vertex(v)?;
        self.counters.ops += 1;
        self.access(v);
        Ok(self.nodes[v].size)
    }

    /// Adds an edge making `v` a child of `u`; `v`'s tree is rerooted at `v`
    /// first. `payload` is oriented u→v.
    pub fn link(&mut self, u: usize, v: usize, payload: EdgePayload) -> Result<()> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        self.counters.ops += 1;
        if u == v || self.root_raw(u) == self.root_raw(v) {
            return Err(FlowError::SameTree { u, v });
        }
        self.evert_raw(v);
        let w = self.alloc_edge(EdgeData {
            id: payload.edge_id,
            lr: payload.down,
            rl: payload.up,
            cost_lr: payload.cost_down,
        });
        self.attach_raw(v, w);
        self.attach_raw(w, u);
        self.edge_nodes.insert(key(u, v), w);
        Ok(())
    }

    /// Removes the edge between `u` and `v`, returning its current weights
    /// oriented u→v.
    pub fn cut(&mut self, u: usize, v: usize) -> Result<EdgePayload> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        self.counters.ops += 1;
        let w = *self.edge_nodes.get(&key(u, v)).ok_or(FlowError::NoSuchEdge { u, v })?;
        let u_is_child = self.parent_raw(u) == Some(w);
        let (child, _parent) = if u_is_child { (u, v) } else { (v, u) };
        self.cut_parent_raw(child);
        self.cut_parent_raw(w);
        self.edge_nodes.remove(&key(u, v));
        let data = self.nodes[w].edge.take().expect("edge node carries edge data");
        self.nodes[w] = Node::vertex();
        self.nodes[w].vertex = false;
        self.nodes[w].size = 0;
        self.free.push(w);
        // `lr` now runs from the former parent endpoint to the former child
        let payload = EdgePayload { edge_id: data.id, down: data.lr, up: data.rl, cost_down: data.cost_lr };
        Ok(if u_is_child { payload.reversed() } else { payload })
    }

    /// Pushes `delta` units along the u→v path: availability towards `v`
    /// drops by `delta` on every edge and the opposite one rises by `delta`.
    /// Fails without modifying anything if any availability would go negative.
    pub fn path_add(&mut self, u: usize, v: usize, delta: &Rational) -> Result<()> {
        self.counters.ops += 1;
        if u == v {
            self.check_vertex(u)?;
            return Ok(());
        }
        let r = self.expose(u, v)?;
        let ok = {
            let n = &self.nodes[v];
            let fwd_ok = n.min_lr.as_ref().is_none_or(|(m, _)| m >= delta);
            let bwd_ok = n.min_rl.as_ref().is_none_or(|(m, _)| !(m + delta).is_negative());
            fwd_ok && bwd_ok
        };
        if ok {
            self.apply_add(v, &-delta);
        }
        self.evert_raw(r);
        if ok {
            Ok(())
        } else {
            Err(FlowError::NegativeAvailability { u, v, delta: delta.clone() })
        }
    }

    /// Edge of minimum u→v availability on the path; ties go to the edge
    /// closest to `u`.
    pub fn path_min(&mut self, u: usize, v: usize) -> Result<(usize, Rational)> {
        self.counters.ops += 1;
        if u == v {
            self.check_vertex(u)?;
            return Err(FlowError::SameNode(u));
        }
        let r = self.expose(u, v)?;
        let (value, edge) = self.nodes[v].min_lr.clone().expect("path between distinct nodes has an edge");
        self.evert_raw(r);
        Ok((edge, value))
    }

    /// Sum of per-unit costs along the path in the u→v direction.
    pub fn path_sum(&mut self, u: usize, v: usize) -> Result<CostValue> {
        self.counters.ops += 1;
        if u == v {
            self.check_vertex(u)?;
            return Ok(CostValue::zero());
        }
        let r = self.expose(u, v)?;
        let cost = self.nodes[v].cost.clone();
        self.evert_raw(r);
        Ok(cost)
    }

    /// Skews the stored u→v availability of one edge without touching its
    /// reverse, so that later queries disagree with a faithful model.
    #[doc(hidden)]
    pub fn corrupt_edge_for_testing(&mut self, u: usize, v: usize, delta: &Rational) -> Result<()> {
        let w = *self.edge_nodes.get(&key(u, v)).ok_or(FlowError::NoSuchEdge { u, v })?;
        self.access(w);
        if let Some(e) = &mut self.nodes[w].edge {
            e.lr += delta;
        }
        self.pull(w);
        Ok(())
    }
}
