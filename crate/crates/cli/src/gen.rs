//! Random fractional circulations and s-t flows.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use flowround::{CostValue, FlowState, Graph, Rational};

use crate::format::Instance;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenParams {
    pub n: usize,
    pub m: usize,
    pub cycles: usize,
    pub seed: u64,
    pub costed: bool,
}

/// A random Hamiltonian cycle plus `m - n` random edges, carrying the sum of
/// `cycles` random simple cycles with weights `p/D`. `D` is drawn once per
/// instance from `[2, 1000]`. Edges with negative flow are reversed, so every
/// flow is non-negative.
pub fn generate(p: &GenParams) -> Result<FlowState, GenError> {
    if p.n < 3 || p.m < p.n {
        return Err(GenError::Infeasible(format!("need m >= n >= 3, got n = {} m = {}", p.n, p.m)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let n = p.n;

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (perm[i], perm[(i + 1) % n])).collect();
    while edges.len() < p.m {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n - 1);
        edges.push((u, if v >= u { v + 1 } else { v }));
    }
    edges.shuffle(&mut rng);

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (id, &(t, h)) in edges.iter().enumerate() {
        adj[t].push(id);
        adj[h].push(id);
    }
    let den = rng.gen_range(2..=1000i64);
    let mut flows = vec![Rational::zero(); p.m];
    for _ in 0..p.cycles {
        let num = loop {
            let x = rng.gen_range(1..3 * den);
            if x % den != 0 {
                break x;
            }
        };
        let w = Rational::new(num, den);
        for (e, forward) in random_simple_cycle(&edges, &adj, &mut rng) {
            if forward {
                flows[e] += &w;
            } else {
                flows[e] -= &w;
            }
        }
    }

    let mut graph = Graph::new(n);
    for (e, &(t, h)) in edges.iter().enumerate() {
        let (t, h) = if flows[e].is_negative() {
            flows[e] = -&flows[e];
            (h, t)
        } else {
            (t, h)
        };
        graph.add_edge(t, h).expect("endpoints in range");
    }
    let costs = p
        .costed
        .then(|| (0..p.m).map(|_| CostValue::finite(Rational::from_integer(rng.gen_range(-10..=10)))).collect());
    Ok(FlowState::new(graph, flows, costs).expect("lengths match"))
}

/// Walks from a random node without immediately reusing the last edge until
/// it revisits a node; the loop closed there is the cycle.
fn random_simple_cycle(edges: &[(usize, usize)], adj: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Vec<(usize, bool)> {
    let n = adj.len();
    let mut pos = vec![usize::MAX; n];
    let mut walk: Vec<(usize, bool)> = Vec::new();
    let mut v = rng.gen_range(0..n);
    pos[v] = 0;
    loop {
        let last = walk.last().map(|&(e, _)| e);
        let choices: Vec<usize> = adj[v].iter().copied().filter(|&e| Some(e) != last).collect();
        let e = *choices.choose(rng).expect("every node lies on the Hamiltonian cycle");
        let (t, h) = edges[e];
        let forward = t == v;
        let next = if forward { h } else { t };
        walk.push((e, forward));
        if pos[next] != usize::MAX {
            return walk.split_off(pos[next]);
        }
        pos[next] = walk.len();
        v = next;
    }
}

/// An s-t flow: a generated circulation minus one fractional edge `a→b`,
/// which leaves source `b` and sink `a` with flow value `f(a→b)`. The result
/// has `m - 1` edges.
pub fn generate_flow(p: &GenParams) -> Result<Instance, GenError> {
    let circ = generate(p)?;
    let fractional = circ.fractional_edges();
    if fractional.is_empty() {
        return Err(GenError::Infeasible("no fractional edge to open into an s-t flow".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ 0x5bd1_e995);
    let cut = *fractional.choose(&mut rng).expect("nonempty");
    let removed = circ.edge(cut);
    let mut graph = Graph::new(p.n);
    let mut flows = Vec::with_capacity(p.m - 1);
    let mut costs = Vec::new();
    for e in (0..circ.edge_count()).filter(|&e| e != cut) {
        let edge = circ.edge(e);
        graph.add_edge(edge.tail, edge.head).expect("endpoints in range");
        flows.push(circ.original(e).clone());
        if let Some(c) = circ.costs() {
            costs.push(c[e].clone());
        }
    }
    let state = FlowState::new(graph, flows, p.costed.then_some(costs)).expect("lengths match");
    Ok(Instance::new(state, Some((removed.head, removed.tail))))
}
