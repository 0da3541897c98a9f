use std::collections::HashMap;

use num_traits::Zero;
use serde::Serialize;

use super::{max_load, AdaptivePolicy, Decision};
use crate::error::{Error, Result};
use crate::instance::ChoiceTable;
use crate::stoch::Rational;

pub const DEFAULT_STATE_LIMIT: usize = 2_000_000;

pub(crate) type Key = (u64, Vec<Rational>);

/// Memoized optimal values `V(S, L)` over (remaining set, realized loads).
///
/// `V(empty, L) = max_i L_i` and `V(S, L) = min_{j in S, c} E[V(S - j, L + a(c) X_j)]`.
/// Ties go to the lowest `(j, c)`. The memo is shared across every subset, so
/// restarts on sub-instances reuse it.
pub struct OptimalDp<'t> {
    table: &'t ChoiceTable,
    memo: HashMap<Key, (Rational, Option<Decision>)>,
    limit: usize,
}

impl<'t> OptimalDp<'t> {
    pub fn new(table: &'t ChoiceTable, limit: usize) -> Result<Self> {
        if table.len() > 63 {
            return Err(Error::StateSpaceExceeded {
                states: table.len(),
                limit: 63,
            });
        }
        Ok(Self {
            table,
            memo: HashMap::new(),
            limit,
        })
    }

    pub fn table(&self) -> &'t ChoiceTable {
        self.table
    }

    pub fn states(&self) -> usize {
        self.memo.len()
    }

    pub fn full_mask(&self) -> u64 {
        (1u64 << self.table.len()) - 1
    }

    pub fn value(&mut self, mask: u64, loads: &[Rational]) -> Result<Rational> {
        Ok(self.solve(mask, loads)?.0)
    }

    pub fn decision(&mut self, mask: u64, loads: &[Rational]) -> Result<Option<Decision>> {
        Ok(self.solve(mask, loads)?.1)
    }

    fn solve(&mut self, mask: u64, loads: &[Rational]) -> Result<(Rational, Option<Decision>)> {
        if mask == 0 {
            return Ok((max_load(loads), None));
        }
        let key = (mask, loads.to_vec());
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        if self.memo.len() >= self.limit {
            return Err(Error::StateSpaceExceeded {
                states: self.memo.len(),
                limit: self.limit,
            });
        }
        let mut best: Option<(Rational, Decision)> = None;
        for j in 0..self.table.len() {
            if mask & (1 << j) == 0 {
                continue;
            }
            for c in 0..self.table.requests[j].len() {
                let choice = self.table.choice(j, c);
                let mut expected = Rational::zero();
                for (x, p) in choice.law.support() {
                    let mut next = loads.to_vec();
                    for (i, a) in &choice.footprint {
                        next[*i] += a * x;
                    }
                    expected += self.solve(mask & !(1 << j), &next)?.0 * p;
                }
                if best.as_ref().is_none_or(|(v, _)| expected < *v) {
                    best = Some((expected, Decision { request: j, config: c }));
                }
            }
        }
        let (v, d) = best.expect("nonempty remaining set has a decision");
        let out = (v, Some(d));
        self.memo.insert(key, out.clone());
        Ok(out)
    }

    /// Decision tree of the optimal policy from `(mask, loads)`.
    pub fn tree(&mut self, mask: u64, loads: &[Rational]) -> Result<PolicyTree> {
        let decision = self.decision(mask, loads)?;
        let mut children = Vec::new();
        if let Some(d) = decision {
            let choice = self.table.choice(d.request, d.config);
            for (x, p) in choice.law.support() {
                let mut next = loads.to_vec();
                for (i, a) in &choice.footprint {
                    next[*i] += a * x;
                }
                children.push(Branch {
                    realized: x.to_string(),
                    prob: p.to_string(),
                    restart: false,
                    node: self.tree(mask & !(1 << d.request), &next)?,
                });
            }
        }
        Ok(PolicyTree {
            remaining: mask_ids(mask),
            loads: loads.iter().map(ToString::to_string).collect(),
            decision,
            children,
        })
    }
}

pub(crate) fn mask_ids(mask: u64) -> Vec<usize> {
    (0..64).filter(|j| mask & (1 << j) != 0).collect()
}

/// Node of a policy decision tree: the state, the decision taken there, and
/// one child per realization of the chosen request.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicyTree {
    pub remaining: Vec<usize>,
    pub loads: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Branch>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub realized: String,
    pub prob: String,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub restart: bool,
    pub node: PolicyTree,
}

impl PolicyTree {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|b| b.node.size()).sum::<usize>()
    }
}

/// Exact optimal adaptive policy of a tiny instance.
pub struct OptimalPolicy {
    pub value: Rational,
    pub tree: PolicyTree,
    decisions: HashMap<Key, Decision>,
}

impl OptimalPolicy {
    pub fn states(&self) -> usize {
        self.decisions.len()
    }
}

impl AdaptivePolicy for OptimalPolicy {
    fn decide(&self, remaining: &[bool], loads: &[Rational]) -> Option<Decision> {
        let mask = remaining
            .iter()
            .enumerate()
            .filter(|(_, r)| **r)
            .fold(0u64, |m, (j, _)| m | (1 << j));
        self.decisions.get(&(mask, loads.to_vec())).copied()
    }
}

pub fn optimal_adaptive(table: &ChoiceTable) -> Result<OptimalPolicy> {
    optimal_adaptive_with_limit(table, DEFAULT_STATE_LIMIT)
}

pub fn optimal_adaptive_with_limit(table: &ChoiceTable, limit: usize) -> Result<OptimalPolicy> {
    let mut dp = OptimalDp::new(table, limit)?;
    let zero = vec![Rational::zero(); table.resources];
    let mask = dp.full_mask();
    let value = dp.value(mask, &zero)?;
    let tree = dp.tree(mask, &zero)?;
    let decisions = dp
        .memo
        .into_iter()
        .filter_map(|(k, (_, d))| d.map(|d| (k, d)))
        .collect();
    Ok(OptimalPolicy {
        value,
        tree,
        decisions,
    })
}
