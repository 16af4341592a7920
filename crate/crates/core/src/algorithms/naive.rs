use crate::error::{FlowError, Result};
use crate::graph::{CostValue, DirectedEdgeRef, FlowState};
use crate::policy::CancelPolicy;

use super::{decide, dir_from, finish, prepare, signed, RunStats};

/// Reference rounder: find any fractional cycle by depth-first search,
/// cancel it, repeat. Quadratic or worse, but short and obviously correct.
pub fn round_naive(mut state: FlowState, policy: &mut dyn CancelPolicy) -> Result<(FlowState, RunStats)> {
    let mut stats = RunStats::default();
    prepare(&mut state, policy, &mut stats)?;
    while let Some(cycle) = find_cycle(&state) {
        let a = cycle.iter().map(|d| state.availability(*d)).min().expect("nonempty cycle");
        let b = cycle.iter().map(|d| state.availability(d.flipped())).min().expect("nonempty cycle");
        let cost = || Ok(cycle.iter().fold(CostValue::zero(), |acc, d| acc + state.directed_cost(*d)));
        let d = decide(policy, cost, &a, &b)?;
        let amount = signed(&d);
        let before = cycle.iter().filter(|d| !state.working(d.edge_id).is_integral()).count();
        for dir in &cycle {
            state.push(*dir, &amount);
        }
        let after = cycle.iter().filter(|d| !state.working(d.edge_id).is_integral()).count();
        if after >= before {
            return Err(FlowError::Invariant("cancellation left every cycle edge fractional".into()));
        }
        stats.cycles_canceled += 1;
    }
    finish(&state)?;
    Ok((state, stats))
}

/// A cycle of fractional non-loop edges, oriented consistently, or `None`
/// when the fractional edges form a forest.
pub(crate) fn find_cycle(state: &FlowState) -> Option<Vec<DirectedEdgeRef>> {
    let n = state.node_count();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in state.fractional_edges() {
        let edge = state.edge(e);
        if !edge.is_self_loop() {
            adj[edge.tail].push(e);
            adj[edge.head].push(e);
        }
    }
    // parent edge and depth per visited node
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut depth: Vec<usize> = vec![usize::MAX; n];
    for start in 0..n {
        if depth[start] != usize::MAX || adj[start].is_empty() {
            continue;
        }
        depth[start] = 0;
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if *next == adj[u].len() {
                stack.pop();
                continue;
            }
            let e = adj[u][*next];
            *next += 1;
            if parent[u] == Some(e) {
                continue;
            }
            let w = state.edge(e).other(u);
            if depth[w] == usize::MAX {
                depth[w] = depth[u] + 1;
                parent[w] = Some(e);
                stack.push((w, 0));
            } else if depth[w] < depth[u] {
                // back edge to an ancestor: walk the tree path w -> u, then e back to w
                let mut path = Vec::new();
                let mut v = u;
                while v != w {
                    let pe = parent[v].expect("ancestor reachable");
                    let p = state.edge(pe).other(v);
                    path.push(dir_from(state, pe, p));
                    v = p;
                }
                path.reverse();
                path.push(dir_from(state, e, u));
                return Some(path);
            }
        }
    }
    None
}
