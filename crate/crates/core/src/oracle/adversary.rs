use num_traits::{One, Zero};

use crate::instance::sqrt_rational;
use crate::stoch::Rational;

/// An online related-machines algorithm that must place each job before its
/// size is revealed. `loads` are realized completion times so far.
pub trait NonClairvoyant {
    fn place(&mut self, speeds: &[Rational], loads: &[Rational]) -> usize;
}

/// Everything on machine 0.
pub struct AlwaysFast;

impl NonClairvoyant for AlwaysFast {
    fn place(&mut self, _speeds: &[Rational], _loads: &[Rational]) -> usize {
        0
    }
}

/// First job on machine 1, the rest on machine 0.
#[derive(Default)]
pub struct FirstJobSlow {
    placed: usize,
}

impl NonClairvoyant for FirstJobSlow {
    fn place(&mut self, speeds: &[Rational], _loads: &[Rational]) -> usize {
        self.placed += 1;
        if self.placed == 1 && speeds.len() > 1 {
            1
        } else {
            0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdversaryOutcome {
    pub speeds: Vec<Rational>,
    /// Revealed sizes in arrival order.
    pub sizes: Vec<Rational>,
    pub machines: Vec<usize>,
    pub loads: Vec<Rational>,
    pub makespan: Rational,
    /// Makespan of the clairvoyant schedule: big job on the fast machine, one
    /// small job per slow machine.
    pub clairvoyant: Rational,
}

/// Runs the clairvoyance adversary on `m` machines (one of speed 1, the rest
/// of speed `1/sqrt(m)`) against `alg`.
///
/// Jobs are small (`1/sqrt(m)`) until the algorithm first uses a slow machine;
/// that job is revealed as the single big job (size 1). If the algorithm never
/// uses a slow machine, the last job is big.
pub fn clairvoyance_adversary(m: usize, alg: &mut dyn NonClairvoyant) -> AdversaryOutcome {
    assert!(m >= 1, "need at least one machine");
    let small = sqrt_rational(m).recip();
    let mut speeds = vec![Rational::one()];
    speeds.extend(std::iter::repeat_n(small.clone(), m - 1));
    let mut loads = vec![Rational::zero(); m];
    let mut sizes = Vec::with_capacity(m);
    let mut machines = Vec::with_capacity(m);
    let mut big_used = false;
    for t in 0..m {
        let i = alg.place(&speeds, &loads);
        assert!(i < m, "algorithm chose machine {i} of {m}");
        let size = if !big_used && (i != 0 || t + 1 == m) {
            big_used = true;
            Rational::one()
        } else {
            small.clone()
        };
        loads[i] += size.clone() / speeds[i].clone();
        sizes.push(size);
        machines.push(i);
    }
    let makespan = loads.iter().max().cloned().unwrap_or_else(Rational::zero);
    AdversaryOutcome {
        speeds,
        sizes,
        machines,
        loads,
        makespan,
        clairvoyant: Rational::one(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stoch::rat;

    #[test]
    fn always_fast_pays_sqrt_m() {
        let out = clairvoyance_adversary(4, &mut AlwaysFast);
        assert_eq!(out.makespan, rat(5, 2));
        assert_eq!(out.sizes.last(), Some(&rat(1, 1)));
    }

    #[test]
    fn early_slow_placement_gets_the_big_job() {
        let out = clairvoyance_adversary(4, &mut FirstJobSlow::default());
        assert_eq!(out.sizes[0], rat(1, 1));
        assert_eq!(out.loads[1], rat(2, 1));
        assert!(out.makespan >= rat(2, 1));
    }

    #[test]
    fn single_machine_ratio_is_one() {
        let out = clairvoyance_adversary(1, &mut AlwaysFast);
        assert_eq!(out.makespan, out.clairvoyant);
    }
}
