#![allow(dead_code)]

use flowround::{CostValue, FlowState, Rational, RngState};

/// Random circulation: a spanning cycle plus extra random edges, with
/// `cycles` fractional cycles superposed on top. Some flows start integral.
pub fn random_circulation(seed: u64, n: usize, m: usize, cycles: usize, costed: bool) -> FlowState {
    let mut rng = RngState::new(seed);
    let mut pick = |b: usize| rng.below_u64(b as u64) as usize;
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    while edges.len() < m {
        edges.push((pick(n), pick(n)));
    }
    let mut flows: Vec<Rational> = (0..m).map(|_| Rational::zero()).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (id, &(t, h)) in edges.iter().enumerate() {
        if t != h {
            adj[t].push(id);
            adj[h].push(id);
        }
    }
    let den = 2 + pick(9) as i64;
    for _ in 0..cycles {
        let w = Rational::new(1 + pick(den as usize - 1) as i64, den);
        let start = pick(n);
        let mut seen = vec![usize::MAX; n];
        let mut walk: Vec<(usize, bool)> = Vec::new();
        let mut v = start;
        seen[v] = 0;
        loop {
            let e = adj[v][pick(adj[v].len())];
            let (t, h) = edges[e];
            let fwd = t == v;
            let next = if fwd { h } else { t };
            walk.push((e, fwd));
            if seen[next] != usize::MAX {
                for &(e, fwd) in &walk[seen[next]..] {
                    if fwd {
                        flows[e] += &w;
                    } else {
                        flows[e] -= &w;
                    }
                }
                break;
            }
            seen[next] = walk.len();
            v = next;
        }
    }
    // an integral self-loop and a fractional one now and then
    let mut triples: Vec<(usize, usize, Rational)> =
        edges.iter().zip(flows).map(|(&(t, h), f)| (t, h, f)).collect();
    if pick(3) == 0 {
        let v = pick(n);
        triples.push((v, v, Rational::new(pick(7) as i64, 3)));
    }
    let st = FlowState::from_triples(n, &triples).unwrap();
    if costed {
        let costs = (0..st.edge_count())
            .map(|_| CostValue::finite(Rational::from_integer(pick(21) as i64 - 10)))
            .collect();
        st.with_costs(costs).unwrap()
    } else {
        st
    }
}
