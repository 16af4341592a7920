//! Batch rounding over a forest of bounded-size clusters.
//!
//! Processed nodes form primary trees. Each primary tree is cut into
//! clusters; the edges inside a cluster live in one shared [`DynTree`] (a
//! cluster is one of its components, rooted at the cluster root), and the
//! edge from a cluster root to its parent cluster is kept as a parent
//! pointer with its flow stored directly in the state.

use std::collections::HashMap;

use crate::error::{FlowError, Result};
use crate::graph::{CostValue, FlowState};
use crate::linkcut::DynTree;
use crate::policy::CancelPolicy;
use crate::rational::Rational;

use super::mlogn::{extract_zeros, flush, payload_from};
use super::{
    decide, default_k, dir_from, finish, prepare, processing_order, signed, ClusterAudit, RunOptions, RunStats,
};

/// Where flow pushed along an aggregate towards `x` must eventually go.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    /// Directly onto x-edge `e`, whose forest endpoint is `w`.
    XEdge { e: usize, w: usize },
    /// Deferred onto the survivor path of the child cluster rooted here.
    Child(usize),
}

#[derive(Debug, Clone)]
struct Agg {
    to_x: Rational,
    from_x: Rational,
    cost: CostValue,
    origin: Origin,
}

impl Agg {
    fn push(&mut self, d: &Rational) {
        self.to_x -= d;
        self.from_x += d;
    }

    fn alive(&self) -> bool {
        self.to_x.is_positive() && self.from_x.is_positive()
    }
}

struct Rounder<'a> {
    state: FlowState,
    policy: &'a mut dyn CancelPolicy,
    costs: bool,
    k: usize,
    tree: DynTree,
    /// At cluster roots: parent node and the connecting edge.
    parent_ptr: Vec<Option<(usize, usize)>>,
    stats: RunStats,
    audit: Option<ClusterAudit>,
    walk_steps: u64,
    // per-round scratch, indexed by cluster root
    visit_stamp: Vec<usize>,
    pending: Vec<Rational>,
    survivor: Vec<Option<Agg>>,
    star: Vec<Option<(usize, Origin)>>,
}

/// Rounds with clusters of size parameter `k` (default `ceil(n^2/m)`
/// clamped to `[1, n]`). Within a cluster, cycles are canceled with path
/// queries; across clusters the batch scheme with deferred flow is used.
pub fn round_mlogn2m(
    mut state: FlowState,
    policy: &mut dyn CancelPolicy,
    opts: &RunOptions,
) -> Result<(FlowState, RunStats)> {
    let n = state.node_count();
    let k = match opts.k {
        Some(0) => return Err(FlowError::InvalidK(0)),
        Some(k) => k,
        None => default_k(n, state.edge_count()),
    };
    let mut stats = RunStats { k: Some(k), max_cluster_size: usize::from(n > 0), ..RunStats::default() };
    prepare(&mut state, policy, &mut stats)?;
    let costs = policy.uses_costs();
    let mut r = Rounder {
        state,
        policy,
        costs,
        k,
        tree: DynTree::new(n),
        parent_ptr: vec![None; n],
        stats,
        audit: opts.audit_clusters.then(|| ClusterAudit::new(k, n)),
        walk_steps: 0,
        visit_stamp: vec![usize::MAX; n],
        pending: vec![Rational::zero(); n],
        survivor: vec![None; n],
        star: vec![None; n],
    };
    r.run(opts.order_seed)?;
    let Rounder { mut state, mut tree, mut stats, audit, walk_steps, .. } = r;
    flush(&mut tree, &mut state)?;
    let c = tree.counters();
    stats.tree_ops = c.ops + walk_steps;
    stats.rotations = c.rotations;
    stats.cluster_audit = audit;
    finish(&state)?;
    Ok((state, stats))
}

impl Rounder<'_> {
    fn run(&mut self, order_seed: Option<u64>) -> Result<()> {
        let n = self.state.node_count();
        let incidence = self.state.graph().incidence();
        let mut processed = vec![false; n];
        for (round, x) in processing_order(n, order_seed).into_iter().enumerate() {
            let mut xedges = Vec::new();
            for &e in &incidence[x] {
                let edge = self.state.edge(e);
                let w = edge.other(x);
                if !edge.is_self_loop() && processed[w] && !self.state.working(e).is_integral() {
                    xedges.push((w, e));
                }
            }
            if !xedges.is_empty() {
                let visited = self.merge_step(round, &xedges)?;
                self.stats.clusters_touched += visited.len() as u64;
                self.cancel_step(x, &xedges, &visited)?;
                self.link_step(x, &xedges)?;
            }
            processed[x] = true;
        }
        Ok(())
    }

    fn size(&mut self, root: usize) -> Result<usize> {
        self.tree.tree_size(root)
    }

    /// Step 1: walk up from every cluster with an edge to `x`, merging
    /// adjacent clusters that are both smaller than `k`. Returns the roots of
    /// the visited clusters.
    fn merge_step(&mut self, round: usize, xedges: &[(usize, usize)]) -> Result<Vec<usize>> {
        let mut order = Vec::new();
        for &(w, _) in xedges {
            let mut c = self.tree.find_root(w)?;
            if self.visit_stamp[c] == round {
                continue;
            }
            self.visit_stamp[c] = round;
            order.push(c);
            while let Some((p, e)) = self.parent_ptr[c] {
                self.walk_steps += 1;
                let pc = self.tree.find_root(p)?;
                if self.size(c)? < self.k && self.size(pc)? < self.k {
                    let payload = payload_from(&self.state, e, p);
                    self.tree.link(p, c, payload)?;
                    self.parent_ptr[c] = None;
                    self.visit_stamp[c] = usize::MAX;
                    self.stats.merges += 1;
                    let merged = self.size(pc)?;
                    self.stats.max_cluster_size = self.stats.max_cluster_size.max(merged);
                }
                if self.visit_stamp[pc] == round {
                    break;
                }
                self.visit_stamp[pc] = round;
                order.push(pc);
                c = pc;
            }
        }
        let visited: Vec<usize> = order.into_iter().filter(|&c| self.visit_stamp[c] == round).collect();
        if self.audit.is_some() {
            self.audit_clusters(&visited)?;
        }
        Ok(visited)
    }

    fn audit_clusters(&mut self, visited: &[usize]) -> Result<()> {
        let n = self.state.node_count();
        let mut sizes = HashMap::new();
        for &c in visited {
            sizes.insert(c, self.size(c)?);
        }
        let mut parents = std::collections::HashSet::new();
        let (mut too_big, mut both_small) = (0, 0);
        for &c in visited {
            if sizes[&c] > 2 * self.k {
                too_big += 1;
            }
            if let Some((p, _)) = self.parent_ptr[c] {
                let pc = self.tree.find_root(p)?;
                let ps = match sizes.get(&pc) {
                    Some(s) => *s,
                    None => return Err(FlowError::Invariant(format!("parent of visited cluster {c} not visited"))),
                };
                if sizes[&c] < self.k && ps < self.k {
                    both_small += 1;
                }
                parents.insert(pc);
            }
        }
        let audit = self.audit.as_mut().expect("auditing");
        audit.steps += 1;
        audit.size_violations += too_big;
        audit.adjacency_violations += both_small;
        audit.max_cluster_size = audit.max_cluster_size.max(sizes.values().copied().max().unwrap_or(0));
        audit.max_internal_clusters = audit.max_internal_clusters.max(parents.len());
        let ratio = Rational::new((parents.len() * self.k) as i64, n.max(1) as i64);
        if ratio > audit.max_internal_ratio {
            audit.max_internal_ratio = ratio;
        }
        Ok(())
    }

    /// Step 2: cancel every cycle through `x`, visiting clusters bottom-up.
    fn cancel_step(&mut self, x: usize, xedges: &[(usize, usize)], visited: &[usize]) -> Result<()> {
        let mut xat: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
        for &(w, e) in xedges {
            let r = self.tree.find_root(w)?;
            xat.entry(r).or_default().push((e, w));
        }
        let mut children: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut tops = Vec::new();
        for &c in visited {
            match self.parent_ptr[c] {
                Some((p, _)) => {
                    let pc = self.tree.find_root(p)?;
                    children.entry(pc).or_default().push(c);
                }
                None => tops.push(c),
            }
        }
        let mut post = Vec::with_capacity(visited.len());
        for &top in &tops {
            let mut stack = vec![(top, false)];
            while let Some((c, expanded)) = stack.pop() {
                if expanded {
                    post.push(c);
                    continue;
                }
                stack.push((c, true));
                for &d in children.get(&c).into_iter().flatten() {
                    stack.push((d, false));
                }
            }
        }
        if post.len() != visited.len() {
            return Err(FlowError::Invariant("visited clusters do not form a forest".into()));
        }

        for &c in &post {
            let mut terminals: Vec<(usize, usize, Agg)> = Vec::new();
            for &(e, w) in xat.get(&c).into_iter().flatten() {
                let out = dir_from(&self.state, e, w);
                terminals.push((
                    e,
                    w,
                    Agg {
                        to_x: self.state.availability(out),
                        from_x: self.state.availability(dir_from(&self.state, e, x)),
                        cost: if self.costs { self.state.directed_cost(out) } else { CostValue::zero() },
                        origin: Origin::XEdge { e, w },
                    },
                ));
            }
            for &d in children.get(&c).into_iter().flatten() {
                let Some(mut agg) = self.survivor[d].take() else { continue };
                let (p, e) = self.parent_ptr[d].expect("child cluster has a parent");
                let down = dir_from(&self.state, e, p);
                agg.to_x = agg.to_x.min(self.state.availability(down));
                agg.from_x = agg.from_x.min(self.state.availability(down.flipped()));
                if self.costs {
                    agg.cost = self.state.directed_cost(down) + agg.cost;
                }
                agg.origin = Origin::Child(d);
                terminals.push((e, p, agg));
            }
            terminals.sort_by_key(|t| t.0);

            let mut live: HashMap<usize, (usize, Agg)> = HashMap::new();
            for (_, t, agg) in terminals {
                let root = self.tree.find_root(t)?;
                match live.remove(&root) {
                    None => {
                        live.insert(root, (t, agg));
                    }
                    Some((tc, prev)) => {
                        for (node, a) in self.cancel(tc, prev, t, agg)? {
                            let r = self.tree.find_root(node)?;
                            if live.insert(r, (node, a)).is_some() {
                                return Err(FlowError::Invariant(format!("two paths to {x} survive in one piece")));
                            }
                        }
                    }
                }
            }

            self.survivor[c] = None;
            self.star[c] = None;
            if let Some((t, agg)) = live.remove(&c) {
                let mut s = Agg { origin: Origin::Child(c), ..agg.clone() };
                if t != c {
                    s.to_x = s.to_x.min(self.tree.path_min(c, t)?.1);
                    s.from_x = s.from_x.min(self.tree.path_min(t, c)?.1);
                    if self.costs {
                        s.cost = self.tree.path_sum(c, t)? + s.cost;
                    }
                }
                self.survivor[c] = Some(s);
                self.star[c] = Some((t, agg.origin));
            }
        }

        // deferred flow, parents before children
        for &c in post.iter().rev() {
            let d = std::mem::take(&mut self.pending[c]);
            self.survivor[c] = None;
            let star = self.star[c].take();
            if d.is_zero() {
                continue;
            }
            let (p, e) = self.parent_ptr[c]
                .ok_or_else(|| FlowError::Invariant(format!("flow deferred to top cluster {c}")))?;
            self.state.push(dir_from(&self.state, e, p), &d);
            if self.state.working(e).is_integral() {
                self.parent_ptr[c] = None;
            }
            let (t, origin) = star.ok_or_else(|| FlowError::Invariant(format!("no survivor path in {c}")))?;
            self.push_tree(c, t, &d)?;
            self.push_origin(origin, &d);
        }
        Ok(())
    }

    /// Cancels the cycle `tc` → (cluster path) → `t` → `p` → `x` → `pc`
    /// reversed. Returns the paths that are still fractional, each with its
    /// terminal node.
    fn cancel(&mut self, tc: usize, mut pc: Agg, t: usize, mut p: Agg) -> Result<Vec<(usize, Agg)>> {
        let mut a = p.to_x.clone().min(pc.from_x.clone());
        let mut b = p.from_x.clone().min(pc.to_x.clone());
        if tc != t {
            a = a.min(self.tree.path_min(tc, t)?.1);
            b = b.min(self.tree.path_min(t, tc)?.1);
        }
        let tree = &mut self.tree;
        let (pcost, pccost) = (&p.cost, &pc.cost);
        let cost = || -> Result<CostValue> {
            let inner = if tc != t { tree.path_sum(tc, t)? } else { CostValue::zero() };
            Ok(&(&inner + pcost) - pccost)
        };
        let d = signed(&decide(self.policy, cost, &a, &b)?);
        self.stats.cycles_canceled += 1;
        self.push_tree(tc, t, &d)?;
        p.push(&d);
        pc.push(&-&d);
        self.push_origin(p.origin, &d);
        self.push_origin(pc.origin, &-&d);
        let mut out = Vec::new();
        if p.alive() {
            out.push((t, p));
        }
        if pc.alive() {
            out.push((tc, pc));
        }
        Ok(out)
    }

    /// Pushes `d` from `from` to `to` inside one cluster and cuts the edges
    /// this makes integral.
    fn push_tree(&mut self, from: usize, to: usize, d: &Rational) -> Result<()> {
        if from == to || d.is_zero() {
            return Ok(());
        }
        let (s, t, amount) = if d.is_positive() { (from, to, d.clone()) } else { (to, from, -d) };
        self.tree.path_add(s, t, &amount)?;
        extract_zeros(&mut self.tree, &mut self.state, s, t)?;
        Ok(())
    }

    fn push_origin(&mut self, origin: Origin, d: &Rational) {
        match origin {
            Origin::XEdge { e, w } => {
                let dir = dir_from(&self.state, e, w);
                self.state.push(dir, d);
            }
            Origin::Child(c) => self.pending[c] += d,
        }
    }

    /// Step 3: hang every primary tree still joined to `x` below `x`,
    /// rerooting it at the x-edge endpoint and reversing parent pointers on
    /// the way up.
    fn link_step(&mut self, x: usize, xedges: &[(usize, usize)]) -> Result<()> {
        for &(y, e) in xedges {
            if self.state.working(e).is_integral() {
                continue;
            }
            let ry = self.tree.find_root(y)?;
            if ry == x {
                return Err(FlowError::Invariant(format!("edge {e} would close a cycle through {x}")));
            }
            let mut ptr = self.parent_ptr[ry].take();
            self.tree.evert(y)?;
            let mut child = ry;
            while let Some((p, pe)) = ptr {
                self.walk_steps += 1;
                let rp = self.tree.find_root(p)?;
                if rp == x {
                    return Err(FlowError::Invariant(format!("edge {e} would close a cycle through {x}")));
                }
                ptr = self.parent_ptr[rp].take();
                self.tree.evert(p)?;
                self.parent_ptr[p] = Some((child, pe));
                child = rp;
            }
            self.parent_ptr[y] = Some((x, e));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::{run, Algorithm};
    use super::*;
    use crate::policy::{CostedPolicy, RandomizedPolicy};

    #[test]
    fn shared_checks() {
        check_algorithm(Algorithm::Mlogn2m);
    }

    fn opts(k: usize) -> RunOptions {
        RunOptions { k: Some(k), audit_clusters: true, ..RunOptions::default() }
    }

    #[test]
    fn extreme_cluster_sizes() {
        let st = mixed();
        for k in [1, 2, 3, st.node_count()] {
            let (out, stats) = round_mlogn2m(st.clone(), &mut CostedPolicy, &opts(k)).unwrap();
            assert_valid(&st, &out, true);
            let audit = stats.cluster_audit.unwrap();
            assert_eq!(audit.violations(), 0);
            assert!(stats.max_cluster_size <= 2 * k);
            if k == 1 {
                assert_eq!(stats.merges, 0);
            }
            for seed in 0..10 {
                let (out, _) = round_mlogn2m(st.clone(), &mut RandomizedPolicy::new(seed), &opts(k)).unwrap();
                assert_valid(&st, &out, false);
            }
        }
    }

    #[test]
    fn zero_k_is_rejected() {
        assert_eq!(round_mlogn2m(mixed(), &mut CostedPolicy, &opts(0)).unwrap_err(), FlowError::InvalidK(0));
    }

    #[test]
    fn default_k_is_reported() {
        let st = mixed();
        let (_, stats) = run(st.clone(), &mut CostedPolicy, Algorithm::Mlogn2m, &RunOptions::default()).unwrap();
        assert_eq!(stats.k, Some(default_k(st.node_count(), st.edge_count())));
    }

    #[test]
    fn two_trees_one_split() {
        // x = 6 joins two primary trees: {0,1,2} by two edges and {3,4,5} by
        // one. The first tree must be cut, the second is simply attached.
        let edges = [
            (0, 1, "1/2"),
            (1, 2, "1/2"),
            (3, 4, "1/3"),
            (4, 5, "1/3"),
            (2, 6, "1/2"),
            (6, 0, "1/2"),
            (5, 3, "1/3"),
            (6, 6, "0"),
        ];
        let triples: Vec<_> = edges.iter().map(|(t, h, f)| (*t, *h, q(f))).collect();
        let st = FlowState::from_triples(7, &triples).unwrap();
        for k in [1, 2, 7] {
            for seed in 0..20 {
                let (out, stats) = round_mlogn2m(st.clone(), &mut RandomizedPolicy::new(seed), &opts(k)).unwrap();
                assert_valid(&st, &out, false);
                assert_eq!(stats.cycles_canceled, 2);
            }
        }
    }
}
