use num_traits::Zero;

use super::related::least_loaded;
use crate::instance::RelatedInstance;
use crate::oracle::{AdaptivePolicy, Decision, NonClairvoyant};
use crate::stoch::Rational;

/// Machines with `s_i >= s_max / sqrt(m)`, compared exactly as
/// `s_i^2 * m >= s_max^2`.
pub fn sqrt_fast_set(speeds: &[Rational]) -> Vec<usize> {
    let top = speeds.iter().max().expect("nonempty speeds");
    let m = Rational::from_integer(speeds.len().into());
    let bar = top.clone() * top.clone();
    (0..speeds.len())
        .filter(|&i| speeds[i].clone() * speeds[i].clone() * m.clone() >= bar)
        .collect()
}

/// Nonclairvoyant list scheduling restricted to the fast set.
#[derive(Clone, Debug, Default)]
pub struct SqrtListScheduler {
    allowed: Option<Vec<usize>>,
}

impl NonClairvoyant for SqrtListScheduler {
    fn place(&mut self, speeds: &[Rational], loads: &[Rational]) -> usize {
        let allowed = self.allowed.get_or_insert_with(|| sqrt_fast_set(speeds));
        least_loaded(allowed, loads)
    }
}

/// The same rule as an executable policy over a related instance: jobs in
/// index order, each on the least loaded machine of the fast set.
#[derive(Clone, Debug, PartialEq)]
pub struct SqrtListPolicy {
    pub allowed: Vec<usize>,
}

impl SqrtListPolicy {
    pub fn new(r: &RelatedInstance) -> Self {
        Self { allowed: sqrt_fast_set(&r.speeds) }
    }
}

impl AdaptivePolicy for SqrtListPolicy {
    fn decide(&self, remaining: &[bool], loads: &[Rational]) -> Option<Decision> {
        let request = remaining.iter().position(|r| *r)?;
        Some(Decision {
            request,
            config: least_loaded(&self.allowed, loads),
        })
    }
}

/// Machine of each job when sizes are revealed after placement.
pub fn nonclairvoyant_sqrt_list(r: &RelatedInstance, sizes: &[Rational]) -> (Vec<usize>, Vec<Rational>) {
    let allowed = sqrt_fast_set(&r.speeds);
    let mut loads = vec![Rational::zero(); r.speeds.len()];
    let mut machines = Vec::with_capacity(sizes.len());
    for x in sizes {
        let i = least_loaded(&allowed, &loads);
        loads[i] += x.clone() / r.speeds[i].clone();
        machines.push(i);
    }
    (machines, loads)
}
