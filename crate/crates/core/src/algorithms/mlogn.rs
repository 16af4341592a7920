use crate::error::Result;
use crate::graph::{CostValue, DirectedEdgeRef, FlowState};
use crate::linkcut::{DynTree, EdgePayload};
use crate::policy::CancelPolicy;

use super::{avail_pair, decide, finish, prepare, processing_order, signed, write_back, RunOptions, RunStats};

/// Inserts fractional edges one at a time into a dynamic forest. An edge
/// whose endpoints are already connected closes a cycle, which is canceled
/// at once; tree edges that turn integral are cut and their flow written
/// back. The forward direction of a cycle follows the inserted edge.
pub fn round_mlogn(
    mut state: FlowState,
    policy: &mut dyn CancelPolicy,
    opts: &RunOptions,
) -> Result<(FlowState, RunStats)> {
    let mut stats = RunStats::default();
    prepare(&mut state, policy, &mut stats)?;
    let mut tree = DynTree::new(state.node_count());
    for e in processing_order(state.edge_count(), opts.order_seed) {
        let edge = state.edge(e);
        if edge.is_self_loop() || state.working(e).is_integral() {
            continue;
        }
        let (u, v) = (edge.tail, edge.head);
        if tree.connected(u, v)? {
            let fwd = DirectedEdgeRef::forward(e);
            let a = state.availability(fwd).min(tree.path_min(v, u)?.1);
            let b = state.availability(fwd.flipped()).min(tree.path_min(u, v)?.1);
            let d = decide(
                policy,
                || Ok(state.directed_cost(fwd) + tree.path_sum(v, u)?),
                &a,
                &b,
            )?;
            let amount = signed(&d);
            state.push(fwd, &amount);
            if d.forward {
                tree.path_add(v, u, &d.amount)?;
                extract_zeros(&mut tree, &mut state, v, u)?;
            } else {
                tree.path_add(u, v, &d.amount)?;
                extract_zeros(&mut tree, &mut state, u, v)?;
            }
            stats.cycles_canceled += 1;
        }
        if !state.working(e).is_integral() {
            let (down, up) = avail_pair(&state, e);
            let cost_down = state.directed_cost(DirectedEdgeRef::forward(e));
            tree.link(u, v, EdgePayload { edge_id: e, down, up, cost_down })?;
        }
    }
    flush(&mut tree, &mut state)?;
    let c = tree.counters();
    stats.tree_ops = c.ops;
    stats.rotations = c.rotations;
    finish(&state)?;
    Ok((state, stats))
}

/// Cuts every edge on the `from`→`to` path whose availability in that
/// direction is zero, searching the two flanking sub-paths of each removed
/// edge in turn, the one nearer `from` first.
pub(crate) fn extract_zeros(tree: &mut DynTree, state: &mut FlowState, from: usize, to: usize) -> Result<usize> {
    let mut removed = 0;
    let mut pending = vec![(from, to)];
    while let Some((s, t)) = pending.pop() {
        if s == t {
            continue;
        }
        let (e, value) = tree.path_min(s, t)?;
        if !value.is_zero() {
            continue;
        }
        let edge = state.edge(e);
        cut_edge(tree, state, e)?;
        removed += 1;
        let (near, far) = if tree.connected(s, edge.tail)? { (edge.tail, edge.head) } else { (edge.head, edge.tail) };
        pending.push((far, t));
        pending.push((s, near));
    }
    Ok(removed)
}

/// Cuts tree edge `e` and stores its current flow in `state`.
pub(crate) fn cut_edge(tree: &mut DynTree, state: &mut FlowState, e: usize) -> Result<()> {
    let edge = state.edge(e);
    let payload = tree.cut(edge.tail, edge.head)?;
    write_back(state, e, &payload.down);
    Ok(())
}

/// Cuts every remaining tree edge, writing flows back.
pub(crate) fn flush(tree: &mut DynTree, state: &mut FlowState) -> Result<()> {
    for (u, v) in tree.edges() {
        let payload = tree.cut(u, v)?;
        let edge = state.edge(payload.edge_id);
        let forward = if edge.tail == u { payload.down } else { payload.up };
        write_back(state, payload.edge_id, &forward);
    }
    Ok(())
}

/// Tree payload for `e` oriented from `from` to the other endpoint.
pub(crate) fn payload_from(state: &FlowState, e: usize, from: usize) -> EdgePayload {
    let (fwd, rev) = avail_pair(state, e);
    let cost: CostValue = state.directed_cost(DirectedEdgeRef::forward(e));
    let p = EdgePayload { edge_id: e, down: fwd, up: rev, cost_down: cost };
    if state.edge(e).tail == from {
        p
    } else {
        p.reversed()
    }
}
