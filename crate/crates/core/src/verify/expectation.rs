use std::fmt;

use rayon::prelude::*;

use crate::algorithms::{run, Algorithm, RunOptions};
use crate::error::{FlowError, Result};
use crate::graph::{CostValue, FlowState};
use crate::policy::{forward_probability, CancelDecision, CancelPolicy, RandomizedPolicy};
use crate::rational::Rational;

/// Replays a fixed list of directions, then always goes forward. Every
/// decision taken beyond the script is recorded so the caller can explore
/// the backward branch later.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPolicy {
    script: Vec<bool>,
    taken: Vec<bool>,
    probability: Rational,
    /// Scripts for the unexplored backward branches.
    branches: Vec<Vec<bool>>,
}

impl ScriptedPolicy {
    pub fn new(script: Vec<bool>) -> Self {
        ScriptedPolicy { script, taken: Vec::new(), probability: Rational::one(), branches: Vec::new() }
    }

    /// Probability of the decision sequence taken so far.
    pub fn probability(&self) -> &Rational {
        &self.probability
    }

    pub fn decisions(&self) -> &[bool] {
        &self.taken
    }

    pub fn take_branches(&mut self) -> Vec<Vec<bool>> {
        std::mem::take(&mut self.branches)
    }
}

impl CancelPolicy for ScriptedPolicy {
    fn uses_costs(&self) -> bool {
        false
    }

    fn decide(&mut self, _: Option<&CostValue>, a: &Rational, b: &Rational) -> Result<CancelDecision> {
        let p = forward_probability(a, b)?;
        let i = self.taken.len();
        let forward = match self.script.get(i) {
            Some(&f) => f,
            None => {
                let mut alt = self.taken.clone();
                alt.push(false);
                self.branches.push(alt);
                true
            }
        };
        self.taken.push(forward);
        if forward {
            self.probability = &self.probability * &p;
            Ok(CancelDecision { forward, amount: a.clone() })
        } else {
            self.probability = &self.probability * &(Rational::one() - &p);
            Ok(CancelDecision { forward, amount: b.clone() })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeExpectation {
    pub edge: usize,
    pub original: Rational,
    /// Exact expectation (oracle) or empirical mean (trials).
    pub mean: Rational,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectationReport {
    pub edges: Vec<EdgeExpectation>,
    /// Enumerated leaves (oracle) or trials run.
    pub branch_count: usize,
    /// Total leaf probability; only meaningful for the oracle.
    pub probability_mass: Option<Rational>,
    /// Number of trials when the report is statistical.
    pub trials: Option<u64>,
}

impl ExpectationReport {
    pub fn passed(&self) -> bool {
        self.edges.iter().all(|e| e.pass) && self.probability_mass.as_ref().is_none_or(|m| *m == Rational::one())
    }

    /// `5 / (2 sqrt(trials))`, for display.
    pub fn tolerance(&self) -> Option<f64> {
        self.trials.map(|t| 2.5 / (t as f64).sqrt())
    }
}

impl fmt::Display for ExpectationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.trials, &self.probability_mass) {
            (Some(t), _) => {
                writeln!(f, "trials {t} tolerance {:.6}", self.tolerance().unwrap_or_default())?;
                for e in &self.edges {
                    writeln!(
                        f,
                        "edge {} f0 {} mean {:.6} diff {:.6} {}",
                        e.edge,
                        e.original,
                        e.mean.to_f64(),
                        (&e.mean - &e.original).abs().to_f64(),
                        if e.pass { "ok" } else { "FAIL" }
                    )?;
                }
            }
            (None, mass) => {
                writeln!(f, "leaves {} mass {}", self.branch_count, mass.clone().unwrap_or_default())?;
                for e in &self.edges {
                    let rel = if e.pass { "==" } else { "!=" };
                    writeln!(f, "edge {} {} {} {} exact", e.edge, e.mean, rel, e.original)?;
                }
            }
        }
        write!(f, "verdict {}", if self.passed() { "pass" } else { "fail" })
    }
}

/// Runs `algo` down every branch of its randomized decisions and sums each
/// leaf's rounded flow weighted by the leaf probability, in exact
/// arithmetic. Fails once more than `max_branches` leaves are needed.
pub fn expectation_oracle(
    state: &FlowState,
    algo: Algorithm,
    opts: &RunOptions,
    max_branches: usize,
) -> Result<ExpectationReport> {
    let m = state.edge_count();
    let mut sums = vec![Rational::zero(); m];
    let mut mass = Rational::zero();
    let mut leaves = 0usize;
    let mut stack: Vec<Vec<bool>> = vec![Vec::new()];
    while let Some(script) = stack.pop() {
        leaves += 1;
        if leaves > max_branches {
            return Err(FlowError::BranchBudgetExceeded(max_branches));
        }
        let mut policy = ScriptedPolicy::new(script);
        let (out, _) = run(state.clone(), &mut policy, algo, opts)?;
        let p = policy.probability().clone();
        for (s, f) in sums.iter_mut().zip(out.workings()) {
            *s += &(&p * f);
        }
        mass += &p;
        stack.extend(policy.take_branches().into_iter().rev());
    }
    let edges = (0..m)
        .map(|e| EdgeExpectation {
            edge: e,
            original: state.original(e).clone(),
            mean: sums[e].clone(),
            pass: sums[e] == *state.original(e),
        })
        .collect();
    Ok(ExpectationReport { edges, branch_count: leaves, probability_mass: Some(mass), trials: None })
}

/// Seed of trial `i`: a splitmix64 step over `base + i * golden`.
pub fn trial_seed(base: u64, i: u64) -> u64 {
    let mut z = base.wrapping_add(i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `trials` randomized roundings (in parallel, seeds from
/// [`trial_seed`]) and checks each edge's mean against its original flow
/// with tolerance `5 / (2 sqrt(trials))`.
pub fn statistical_expectation(
    state: &FlowState,
    algo: Algorithm,
    opts: &RunOptions,
    trials: u64,
    seed: u64,
) -> Result<ExpectationReport> {
    let m = state.edge_count();
    let sums = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut policy = RandomizedPolicy::new(trial_seed(seed, i));
            run(state.clone(), &mut policy, algo, opts).map(|(out, _)| out.workings().to_vec())
        })
        .try_reduce(
            || vec![Rational::zero(); m],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;
    let t = Rational::from_integer(trials.max(1) as i64);
    let edges = (0..m)
        .map(|e| {
            let f0 = state.original(e);
            let gap = &sums[e] - &(&t * f0);
            // 4 * gap^2 <= 25 * trials  <=>  |mean - f0| <= 5 / (2 sqrt(trials))
            let pass = &Rational::from_integer(4) * &(&gap * &gap) <= &Rational::from_integer(25) * &t;
            EdgeExpectation { edge: e, original: f0.clone(), mean: &sums[e] / &t, pass }
        })
        .collect();
    Ok(ExpectationReport { edges, branch_count: trials as usize, probability_mass: None, trials: Some(trials) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn triangle() -> FlowState {
        FlowState::from_triples(3, &[(0, 1, q("1/2")), (1, 2, q("1/2")), (2, 0, q("1/2"))]).unwrap()
    }

    #[test]
    fn triangle_halves() {
        for algo in Algorithm::ALL {
            let r = expectation_oracle(&triangle(), algo, &RunOptions::default(), 100).unwrap();
            assert_eq!(r.branch_count, 2);
            assert_eq!(r.probability_mass, Some(Rational::one()));
            assert!(r.edges.iter().all(|e| e.mean == q("1/2")));
            assert!(r.passed());
        }
    }

    #[test]
    fn disjoint_cycles_give_four_leaves() {
        let st = FlowState::from_triples(
            4,
            &[(0, 1, q("1/3")), (1, 0, q("1/3")), (2, 3, q("7/10")), (3, 2, q("7/10"))],
        )
        .unwrap();
        for algo in Algorithm::ALL {
            let r = expectation_oracle(&st, algo, &RunOptions::default(), 100).unwrap();
            assert_eq!(r.branch_count, 4);
            assert!(r.passed(), "{algo}: {r}");
        }
    }

    #[test]
    fn integral_input_is_one_leaf() {
        let st = FlowState::from_triples(2, &[(0, 1, q("2")), (1, 0, q("2"))]).unwrap();
        let r = expectation_oracle(&st, Algorithm::Mlogn2m, &RunOptions::default(), 1).unwrap();
        assert_eq!(r.branch_count, 1);
        assert!(r.passed());
        let s = statistical_expectation(&st, Algorithm::Naive, &RunOptions::default(), 10, 3).unwrap();
        assert!(s.edges.iter().all(|e| e.mean == e.original));
    }

    #[test]
    fn budget_is_enforced() {
        assert_eq!(
            expectation_oracle(&triangle(), Algorithm::Naive, &RunOptions::default(), 1).unwrap_err(),
            FlowError::BranchBudgetExceeded(1)
        );
    }

    #[test]
    fn statistical_triangle() {
        let r = statistical_expectation(&triangle(), Algorithm::Mlogn2m, &RunOptions::default(), 10_000, 11).unwrap();
        assert!((r.tolerance().unwrap() - 0.025).abs() < 1e-12);
        assert!(r.passed(), "{r}");
        let again = statistical_expectation(&triangle(), Algorithm::Mlogn2m, &RunOptions::default(), 10_000, 11).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn seven_tenths_edge() {
        let st = FlowState::from_triples(2, &[(0, 1, q("7/10")), (1, 0, q("7/10"))]).unwrap();
        let r = statistical_expectation(&st, Algorithm::Mlogn, &RunOptions::default(), 10_000, 5).unwrap();
        assert!((r.edges[0].mean.to_f64() - 0.7).abs() <= 0.025);
    }

    #[test]
    fn trial_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| trial_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
