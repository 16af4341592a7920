//! How a fractional cycle gets canceled, and the flow/circulation reductions.
//!
//! A cycle is always presented with an orientation ("forward"). Its forward
//! availability `a` is what can be pushed forward before some edge turns
//! integral, `b` the same backwards. A policy picks one of the two
//! directions; the amount pushed is always that direction's availability.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FlowError, Result};
use crate::graph::{CostValue, FlowKind, FlowState};
use crate::rational::Rational;

/// Which rounding problem is being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Never increase total cost.
    Costed,
    /// Preserve every edge's flow in expectation.
    Randomized,
}

/// The direction chosen for a cycle and how much flow to push.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CancelDecision {
    pub forward: bool,
    pub amount: Rational,
}

/// Decides cancellation directions.
pub trait CancelPolicy {
    /// Whether `decide` needs the forward cycle cost.
    fn uses_costs(&self) -> bool;

    /// `cost_forward` is `Some` whenever `uses_costs` is true.
    fn decide(
        &mut self,
        cost_forward: Option<&CostValue>,
        forward_avail: &Rational,
        backward_avail: &Rational,
    ) -> Result<CancelDecision>;
}

/// Forward iff pushing forward does not raise cost; zero-cost cycles go forward.
pub fn choose_costed(cycle_cost_forward: &CostValue) -> bool {
    *cycle_cost_forward <= CostValue::zero()
}

/// Probability of canceling forward, `b / (a + b)`, which leaves every edge's
/// expected flow unchanged.
pub fn forward_probability(a: &Rational, b: &Rational) -> Result<Rational> {
    let total = a + b;
    if a.is_negative() || b.is_negative() || total.is_zero() {
        return Err(FlowError::DegenerateCycle { forward: a.clone(), backward: b.clone() });
    }
    Ok(b / &total)
}

/// Seeded generator for the randomized policy (ChaCha8, seeded through
/// `SeedableRng::seed_from_u64`).
#[derive(Debug, Clone)]
pub struct RngState {
    rng: ChaCha8Rng,
}

impl RngState {
    pub const ALGORITHM: &'static str = "chacha8-v1";

    pub fn new(seed: u64) -> Self {
        RngState { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform integer in `[0, bound)` by rejection on the smallest
    /// power-of-two range covering `bound`.
    pub fn below_u64(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let bits = 64 - (bound - 1).leading_zeros();
        let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        loop {
            let x = self.rng.next_u64() & mask;
            if x < bound {
                return x;
            }
        }
    }

    /// Uniform integer in `[0, bound)` for arbitrary positive `bound`.
    pub fn below(&mut self, bound: &BigUint) -> BigUint {
        assert!(!bound.is_zero(), "empty range");
        if let Some(b) = bound.to_u64() {
            return BigUint::from(self.below_u64(b));
        }
        let bits = bound.bits();
        let words = bits.div_ceil(64) as usize;
        let top_bits = bits - 64 * (words as u64 - 1);
        let top_mask = if top_bits == 64 { u64::MAX } else { (1u64 << top_bits) - 1 };
        loop {
            let mut digits: Vec<u64> = (0..words).map(|_| self.rng.next_u64()).collect();
            digits[words - 1] &= top_mask;
            let x = BigUint::from_slice(
                &digits.iter().flat_map(|d| [*d as u32, (*d >> 32) as u32]).collect::<Vec<_>>(),
            );
            if &x < bound {
                return x;
            }
        }
    }
}

/// Exact Bernoulli draw: uniform `u` in `[0, den)`, true iff `u < num`.
pub fn bernoulli(p: &Rational, rng: &mut RngState) -> Result<bool> {
    if p.is_negative() || *p > Rational::one() {
        return Err(FlowError::ProbabilityOutOfRange(p.clone()));
    }
    if let Some((num, den)) = p.as_small() {
        return Ok(rng.below_u64(den as u64) < num as u64);
    }
    let den = to_biguint(&p.denom());
    let num = to_biguint(&p.numer());
    Ok(rng.below(&den) < num)
}

fn to_biguint(n: &BigInt) -> BigUint {
    match n.sign() {
        Sign::Minus => panic!("negative value"),
        _ => n.magnitude().clone(),
    }
}

/// Cancels in whichever direction does not increase cost.
#[derive(Debug, Clone, Default)]
pub struct CostedPolicy;

impl CancelPolicy for CostedPolicy {
    fn uses_costs(&self) -> bool {
        true
    }

    fn decide(
        &mut self,
        cost_forward: Option<&CostValue>,
        a: &Rational,
        b: &Rational,
    ) -> Result<CancelDecision> {
        let cost = cost_forward.ok_or(FlowError::MissingCosts)?;
        Ok(if choose_costed(cost) {
            CancelDecision { forward: true, amount: a.clone() }
        } else {
            CancelDecision { forward: false, amount: b.clone() }
        })
    }
}

/// Cancels forward with probability `b / (a + b)`.
#[derive(Debug, Clone)]
pub struct RandomizedPolicy {
    rng: RngState,
}

impl RandomizedPolicy {
    pub fn new(seed: u64) -> Self {
        RandomizedPolicy { rng: RngState::new(seed) }
    }
}

impl CancelPolicy for RandomizedPolicy {
    fn uses_costs(&self) -> bool {
        false
    }

    fn decide(&mut self, _: Option<&CostValue>, a: &Rational, b: &Rational) -> Result<CancelDecision> {
        let p = forward_probability(a, b)?;
        Ok(if bernoulli(&p, &mut self.rng)? {
            CancelDecision { forward: true, amount: a.clone() }
        } else {
            CancelDecision { forward: false, amount: b.clone() }
        })
    }
}

/// The policy for `mode`; `seed` only matters for randomized rounding.
pub fn policy_for(mode: Mode, seed: u64) -> Box<dyn CancelPolicy + Send> {
    match mode {
        Mode::Costed => Box::new(CostedPolicy),
        Mode::Randomized => Box::new(RandomizedPolicy::new(seed)),
    }
}

/// Closes an `s`→`t` flow into a circulation with a protected `t`→`s` edge
/// carrying the flow value. In costed mode that edge costs minus infinity per
/// unit, so rounding never lowers the flow value.
pub fn circulation_from_flow(state: &FlowState, s: usize, t: usize, mode: Mode) -> Result<FlowState> {
    let n = state.node_count();
    for v in [s, t] {
        if v >= n {
            return Err(FlowError::InvalidNode { node: v, node_count: n });
        }
    }
    if !state.protected_edges().is_empty() {
        return Err(FlowError::NotAFlow("state already has a protected edge".into()));
    }
    let net = state.net_flows(FlowKind::Original);
    let value = net[t].clone();
    if value.is_negative() {
        return Err(FlowError::NotAFlow(format!("sink {t} has net inflow {value}")));
    }
    if s == t && !value.is_zero() {
        return Err(FlowError::NotAFlow("source equals sink".into()));
    }
    for (v, x) in net.iter().enumerate() {
        let expected = if v == t {
            value.clone()
        } else if v == s {
            -&value
        } else {
            Rational::zero()
        };
        if *x != expected {
            return Err(FlowError::NotAFlow(format!("node {v} has net flow {x}, expected {expected}")));
        }
    }
    let mut out = state.clone();
    let cost = match mode {
        Mode::Costed => CostValue::minus_infinity(),
        Mode::Randomized => CostValue::zero(),
    };
    out.push_protected_edge(t, s, value, Some(cost))?;
    Ok(out)
}

/// Drops the protected edge again. The remaining working flow is an s–t flow
/// whose value equals the protected edge's rounded flow.
pub fn flow_from_circulation(state: &FlowState) -> Result<FlowState> {
    let mut out = state.clone();
    out.pop_protected_edge()?;
    Ok(out)
}
