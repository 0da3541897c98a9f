//! Exact adaptive analysis of tiny instances: the optimal adaptive policy by
//! dynamic programming, exact policy evaluation, the restart transform and the
//! clairvoyance adversary. All arithmetic is exact.

mod adversary;
mod dp;
mod restart;

pub use adversary::{clairvoyance_adversary, AdversaryOutcome, AlwaysFast, FirstJobSlow, NonClairvoyant};
pub use dp::{optimal_adaptive, optimal_adaptive_with_limit, Branch, OptimalDp, OptimalPolicy, PolicyTree, DEFAULT_STATE_LIMIT};
pub use restart::{restart_policy, RestartOutcome};

use std::collections::HashMap;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::ChoiceTable;
use crate::stoch::{Rational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Decision {
    pub request: usize,
    pub config: usize,
}

/// A decision rule over `(remaining requests, realized loads)`.
pub trait AdaptivePolicy: Sync {
    fn decide(&self, remaining: &[bool], loads: &[Rational]) -> Option<Decision>;
}

/// Expected makespan and expected total exceptional load
/// `sum_j E[max_i X^E_ij(c_j)]` of a policy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyValue {
    pub makespan: Rational,
    pub exceptional: Rational,
}

impl PolicyValue {
    pub fn to_f64(&self) -> (f64, f64) {
        (self.makespan.to_f64(), self.exceptional.to_f64())
    }
}

pub(crate) fn max_load(loads: &[Rational]) -> Rational {
    loads.iter().max().cloned().unwrap_or_else(Rational::zero)
}

/// Exact evaluation of a policy over every realization path.
pub fn evaluate_policy(table: &ChoiceTable, policy: &dyn AdaptivePolicy, tau: &Rational) -> Result<PolicyValue> {
    let mut memo = HashMap::new();
    let remaining = vec![true; table.len()];
    let loads = vec![Rational::zero(); table.resources];
    let (makespan, exceptional) = eval(table, policy, tau, &remaining, &loads, &mut memo)?;
    Ok(PolicyValue { makespan, exceptional })
}

type EvalMemo = HashMap<(Vec<bool>, Vec<Rational>), (Rational, Rational)>;

fn eval(
    table: &ChoiceTable,
    policy: &dyn AdaptivePolicy,
    tau: &Rational,
    remaining: &[bool],
    loads: &[Rational],
    memo: &mut EvalMemo,
) -> Result<(Rational, Rational)> {
    if !remaining.iter().any(|r| *r) {
        return Ok((max_load(loads), Rational::zero()));
    }
    let key = (remaining.to_vec(), loads.to_vec());
    if let Some(hit) = memo.get(&key) {
        return Ok(hit.clone());
    }
    let d = policy
        .decide(remaining, loads)
        .ok_or_else(|| Error::IncompletePolicy(describe(remaining, loads)))?;
    if !remaining.get(d.request).copied().unwrap_or(false) || d.config >= table.requests[d.request].len() {
        return Err(Error::IncompletePolicy(format!(
            "invalid decision {d:?} at {}",
            describe(remaining, loads)
        )));
    }
    let choice = table.choice(d.request, d.config);
    let mut next_remaining = remaining.to_vec();
    next_remaining[d.request] = false;
    let mut makespan = Rational::zero();
    let mut exceptional = Rational::zero();
    for (x, p) in choice.law.support() {
        let mut next = loads.to_vec();
        for (i, a) in &choice.footprint {
            next[*i] += a * x;
        }
        let (mk, ex) = eval(table, policy, tau, &next_remaining, &next, memo)?;
        let peak = choice.max_multiplier.clone() * x;
        let here = if &peak >= tau { peak } else { Rational::zero() };
        makespan += mk * p;
        exceptional += (ex + here) * p;
    }
    let out = (makespan, exceptional);
    memo.insert(key, out.clone());
    Ok(out)
}

fn describe(remaining: &[bool], loads: &[Rational]) -> String {
    let ids: Vec<usize> = (0..remaining.len()).filter(|&j| remaining[j]).collect();
    let l: Vec<String> = loads.iter().map(ToString::to_string).collect();
    format!("remaining {ids:?}, loads [{}]", l.join(", "))
}

/// Non-adaptive policy: request `j` always uses `configs[j]`; requests are
/// served in index order.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedAssignment {
    pub configs: Vec<usize>,
}

impl AdaptivePolicy for FixedAssignment {
    fn decide(&self, remaining: &[bool], _loads: &[Rational]) -> Option<Decision> {
        let request = remaining.iter().position(|r| *r)?;
        Some(Decision {
            request,
            config: *self.configs.get(request)?,
        })
    }
}

/// The hand policy for the fast/slow machines example: the stochastic job 0
/// goes to the fast machine first. If it came out at `tau`, deterministic job
/// `k` goes to slow machine `k`; otherwise everything joins the fast machine.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptivityGapPolicy {
    pub tau: Rational,
}

impl AdaptivePolicy for AdaptivityGapPolicy {
    fn decide(&self, remaining: &[bool], loads: &[Rational]) -> Option<Decision> {
        let request = remaining.iter().position(|r| *r)?;
        if request == 0 || loads[0] < self.tau {
            return Some(Decision { request, config: 0 });
        }
        Some(Decision {
            request,
            config: request,
        })
    }
}
