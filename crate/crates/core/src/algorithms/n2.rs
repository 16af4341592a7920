use crate::error::{FlowError, Result};
use crate::graph::{CostValue, FlowState};
use crate::policy::CancelPolicy;
use crate::rational::Rational;

use super::{decide, dir_from, finish, prepare, processing_order, signed, RunOptions, RunStats};

/// Summary of one path from a forest node to `x`, ending with an x-edge.
#[derive(Debug, Clone)]
pub(crate) struct PathAgg {
    /// Minimum availability walking towards `x`.
    pub to_x: Rational,
    /// Minimum availability walking away from `x`.
    pub from_x: Rational,
    /// Cost per unit walking towards `x`.
    pub cost: CostValue,
    /// Forest endpoint of the x-edge.
    pub w: usize,
    pub xedge: usize,
}

impl PathAgg {
    pub(crate) fn x_edge(state: &FlowState, e: usize, w: usize, x: usize, costs: bool) -> Self {
        let out = dir_from(state, e, w);
        PathAgg {
            to_x: state.availability(out),
            from_x: state.availability(dir_from(state, e, x)),
            cost: if costs { state.directed_cost(out) } else { CostValue::zero() },
            w,
            xedge: e,
        }
    }

    /// Prepends forest edge `e` from `p` to the path's current start.
    fn extend(mut self, state: &FlowState, e: usize, p: usize, costs: bool) -> Self {
        let down = dir_from(state, e, p);
        self.to_x = self.to_x.min(state.availability(down));
        self.from_x = self.from_x.min(state.availability(down.flipped()));
        if costs {
            self.cost = state.directed_cost(down) + self.cost;
        }
        self
    }

    /// Accounts for `d` units pushed towards `x`.
    pub(crate) fn push(&mut self, d: &Rational) {
        self.to_x -= d;
        self.from_x += d;
    }

    pub(crate) fn alive(&self) -> bool {
        self.to_x.is_positive() && self.from_x.is_positive()
    }
}

/// Adds nodes one at a time to a forest of fractional edges. All cycles
/// closed by a node's edges are canceled in one bottom-up pass per touched
/// tree; flow changes on forest edges are deferred to node marks and applied
/// in a second pass. A cycle's forward direction runs towards `x` along the
/// path found first and back along the later one.
pub fn round_n2(
    mut state: FlowState,
    policy: &mut dyn CancelPolicy,
    opts: &RunOptions,
) -> Result<(FlowState, RunStats)> {
    let mut stats = RunStats::default();
    prepare(&mut state, policy, &mut stats)?;
    let n = state.node_count();
    let costs = policy.uses_costs();
    let incidence = state.graph().incidence();

    let mut processed = vec![false; n];
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut stamp = vec![usize::MAX; n];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut xat: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut waiting: Vec<Vec<PathAgg>> = vec![Vec::new(); n];
    let mut mark = vec![Rational::zero(); n];
    let mut inc = vec![Rational::zero(); n];

    for (round, x) in processing_order(n, opts.order_seed).into_iter().enumerate() {
        let mut xedges = Vec::new();
        for &e in &incidence[x] {
            let edge = state.edge(e);
            let w = edge.other(x);
            if !edge.is_self_loop() && processed[w] && !state.working(e).is_integral() {
                xedges.push((w, e));
            }
        }
        for &(w, e) in &xedges {
            xat[w].push(e);
        }

        // preorder of every touched tree, rooted at its first touched node
        let mut trees: Vec<Vec<usize>> = Vec::new();
        for &(w, _) in &xedges {
            if stamp[w] == round {
                continue;
            }
            stamp[w] = round;
            parent[w] = None;
            let mut pre = Vec::new();
            let mut stack = vec![w];
            while let Some(u) = stack.pop() {
                pre.push(u);
                for &(c, e) in adj[u].iter().rev() {
                    if stamp[c] != round {
                        stamp[c] = round;
                        parent[c] = Some((u, e));
                        stack.push(c);
                    }
                }
            }
            trees.push(pre);
        }

        for pre in &trees {
            stats.tree_ops += 2 * pre.len() as u64;
            for &u in pre.iter().rev() {
                let mut cur: Option<PathAgg> = None;
                let candidates: Vec<PathAgg> = xat[u]
                    .iter()
                    .map(|&e| PathAgg::x_edge(&state, e, u, x, costs))
                    .chain(std::mem::take(&mut waiting[u]))
                    .collect();
                for new in candidates {
                    let Some(mut p1) = cur.take() else {
                        cur = Some(new);
                        continue;
                    };
                    let mut p2 = new;
                    let a = p1.to_x.clone().min(p2.from_x.clone());
                    let b = p1.from_x.clone().min(p2.to_x.clone());
                    let d = decide(policy, || Ok(&p1.cost - &p2.cost), &a, &b)?;
                    let d = signed(&d);
                    p1.push(&d);
                    p2.push(&-&d);
                    state.push(dir_from(&state, p1.xedge, p1.w), &d);
                    state.push(dir_from(&state, p2.xedge, p2.w), &-&d);
                    mark[p1.w] -= &d;
                    mark[p2.w] += &d;
                    stats.cycles_canceled += 1;
                    cur = match (p1.alive(), p2.alive()) {
                        (true, true) => {
                            return Err(FlowError::Invariant(format!("cycle through node {u} left both paths fractional")))
                        }
                        (true, false) => Some(p1),
                        (false, true) => Some(p2),
                        (false, false) => None,
                    };
                }
                if let (Some(agg), Some((p, e))) = (cur, parent[u]) {
                    waiting[p].push(agg.extend(&state, e, p, costs));
                }
            }

            // apply deferred marks bottom-up, pruning edges that became integral
            for &u in pre.iter().rev() {
                let total = std::mem::take(&mut mark[u]) + std::mem::take(&mut inc[u]);
                match parent[u] {
                    Some((p, e)) => {
                        if !total.is_zero() {
                            state.push(dir_from(&state, e, u), &total);
                            if state.working(e).is_integral() {
                                remove_edge(&mut adj, u, p, e);
                            }
                        }
                        inc[p] += &total;
                    }
                    None if !total.is_zero() => {
                        return Err(FlowError::Invariant(format!("marks in tree of {u} sum to {total}")));
                    }
                    None => {}
                }
            }
        }

        for &(w, _) in &xedges {
            xat[w].clear();
        }
        let remaining: Vec<(usize, usize)> =
            xedges.into_iter().filter(|&(_, e)| !state.working(e).is_integral()).collect();
        check_distinct_trees(&adj, &remaining, x)?;
        for (w, e) in remaining {
            adj[x].push((w, e));
            adj[w].push((x, e));
        }
        processed[x] = true;
    }
    finish(&state)?;
    Ok((state, stats))
}

fn remove_edge(adj: &mut [Vec<(usize, usize)>], u: usize, v: usize, e: usize) {
    for (a, b) in [(u, v), (v, u)] {
        if let Some(i) = adj[a].iter().position(|&(c, id)| c == b && id == e) {
            adj[a].remove(i);
        }
    }
}

/// Fails if two remaining x-edges reach the same forest tree.
fn check_distinct_trees(adj: &[Vec<(usize, usize)>], remaining: &[(usize, usize)], x: usize) -> Result<()> {
    if remaining.len() < 2 {
        return Ok(());
    }
    let mut seen = std::collections::HashMap::new();
    for (i, &(w, _)) in remaining.iter().enumerate() {
        if let Some(j) = seen.get(&w) {
            return Err(FlowError::Invariant(format!("x-edges {j} and {i} of node {x} reach one tree")));
        }
        let mut stack = vec![w];
        seen.insert(w, i);
        while let Some(u) = stack.pop() {
            for &(c, _) in &adj[u] {
                if let Some(&j) = seen.get(&c) {
                    if j != i {
                        return Err(FlowError::Invariant(format!("x-edges {j} and {i} of node {x} reach one tree")));
                    }
                } else {
                    seen.insert(c, i);
                    stack.push(c);
                }
            }
        }
    }
    Ok(())
}
