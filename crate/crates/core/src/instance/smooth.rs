use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::RelatedInstance;
use crate::stoch::Rational;

/// One speed class of a smoothed instance.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedGroup {
    /// Rounded speed, in the units of the input instance.
    pub speed: Rational,
    /// Machine indices in the smoothed instance.
    pub machines: Vec<usize>,
    /// The same machines as indices of the input instance.
    pub original: Vec<usize>,
}

impl SpeedGroup {
    pub fn len(&self) -> usize {
        self.machines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.machines.is_empty()
    }
}

/// Speed groups ordered from slowest to fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedGroups {
    pub groups: Vec<SpeedGroup>,
}

impl SmoothedGroups {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn machines(&self) -> usize {
        self.groups.iter().map(SpeedGroup::len).sum()
    }

    /// Group index of each smoothed machine.
    pub fn group_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.machines()];
        for (k, g) in self.groups.iter().enumerate() {
            for &i in &g.machines {
                out[i] = k;
            }
        }
        out
    }

    /// Checks the structural properties against the original machine count
    /// `m`: strictly increasing power-of-two speeds relative to the fastest,
    /// at most `ceil(log2 m) + 1` groups, and `m_k >= 3/2 m_{k+1}`.
    pub fn check(&self, m: usize) -> Result<(), String> {
        let Some(fastest) = self.groups.last() else {
            return Err("no groups".into());
        };
        let top = fastest.speed.clone();
        for (k, pair) in self.groups.windows(2).enumerate() {
            if pair[0].speed >= pair[1].speed {
                return Err(format!("group speeds not increasing at {k}"));
            }
            if Rational::from_integer(2.into()) * Rational::from_integer(pair[0].len().into())
                < Rational::from_integer(3.into()) * Rational::from_integer(pair[1].len().into())
            {
                return Err(format!(
                    "group {k} has {} machines, next has {}",
                    pair[0].len(),
                    pair[1].len()
                ));
            }
        }
        for g in &self.groups {
            if g.is_empty() {
                return Err("empty group".into());
            }
            let mut ratio = top.clone() / g.speed.clone();
            while ratio > Rational::one() && (ratio.numer() % 2u8).is_zero() {
                ratio /= Rational::from_integer(2.into());
            }
            if !ratio.is_one() {
                return Err(format!("speed {} is not a power-of-two fraction of the fastest", g.speed));
            }
        }
        let bound = ceil_log2(m) + 1;
        if self.groups.len() > bound {
            return Err(format!("{} groups exceed bound {bound}", self.groups.len()));
        }
        Ok(())
    }
}

fn ceil_log2(m: usize) -> usize {
    let mut t = 0;
    while (1usize << t) < m {
        t += 1;
    }
    t
}

/// Machine smoothing.
///
/// Normalizes speeds by the fastest machine, drops machines at normalized
/// speed `<= 1/m` (a fastest machine is never dropped), rounds the rest down to
/// powers of two, groups equal speeds, then drops every group with fewer than
/// `3/2` times the machines of the next faster surviving group. Groups are
/// scanned from fast to slow so each comparison is against a group that is
/// known to survive.
///
/// Returns the groups and the surviving instance (original machine order,
/// rounded speeds, same jobs).
pub fn smooth_machines(r: &RelatedInstance) -> (SmoothedGroups, RelatedInstance) {
    let m = r.speeds.len();
    let top = r.speeds.iter().max().expect("nonempty speeds").clone();
    let cutoff = Rational::new(1.into(), m.into());
    let two = Rational::from_integer(2.into());

    // exponent t with 2^-t <= s/top < 2^-(t-1)
    let mut by_exp: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, s) in r.speeds.iter().enumerate() {
        let u = s.clone() / top.clone();
        if u <= cutoff && !u.is_one() {
            continue;
        }
        let mut t = 0;
        let mut p = Rational::one();
        while p > u {
            p /= two.clone();
            t += 1;
        }
        by_exp.entry(t).or_default().push(i);
    }

    // fast to slow: ascending exponent
    let mut kept: Vec<(usize, Vec<usize>)> = Vec::new();
    for (t, ids) in by_exp {
        match kept.last() {
            Some((_, faster)) if 2 * ids.len() < 3 * faster.len() => {}
            _ => kept.push((t, ids)),
        }
    }
    kept.reverse();

    let mut survivors: Vec<(usize, usize)> = kept
        .iter()
        .enumerate()
        .flat_map(|(k, (_, ids))| ids.iter().map(move |&i| (i, k)))
        .collect();
    survivors.sort_unstable();

    let mut groups: Vec<SpeedGroup> = kept
        .iter()
        .map(|(t, _)| {
            let mut speed = top.clone();
            for _ in 0..*t {
                speed /= two.clone();
            }
            SpeedGroup {
                speed,
                machines: Vec::new(),
                original: Vec::new(),
            }
        })
        .collect();
    let mut speeds = Vec::with_capacity(survivors.len());
    for (new_id, &(orig, k)) in survivors.iter().enumerate() {
        groups[k].machines.push(new_id);
        groups[k].original.push(orig);
        speeds.push(groups[k].speed.clone());
    }
    let smoothed = RelatedInstance {
        speeds,
        jobs: r.jobs.clone(),
    };
    (SmoothedGroups { groups }, smoothed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stoch::rat;

    fn related(speeds: Vec<Rational>) -> RelatedInstance {
        RelatedInstance::new(speeds, vec![]).unwrap()
    }

    #[test]
    fn drops_tiny_and_sparse_groups() {
        let r = related(vec![rat(1, 1), rat(1, 1), rat(3, 5), rat(1, 1000)]);
        let (g, s) = smooth_machines(&r);
        assert_eq!(s.speeds, vec![rat(1, 1), rat(1, 1)]);
        assert_eq!(g.groups.len(), 1);
        assert_eq!(g.groups[0].original, vec![0, 1]);
        g.check(4).unwrap();
    }

    #[test]
    fn single_machine_is_identity() {
        let r = related(vec![rat(1, 1)]);
        let (g, s) = smooth_machines(&r);
        assert_eq!(s.speeds, vec![rat(1, 1)]);
        assert_eq!(g.groups[0].machines, vec![0]);
        g.check(1).unwrap();
    }

    #[test]
    fn lone_slow_machine_is_removed() {
        let r = related(vec![rat(1, 1), rat(1, 1), rat(1, 1), rat(1, 2)]);
        let (g, s) = smooth_machines(&r);
        assert_eq!(s.speeds.len(), 3);
        assert_eq!(g.groups.len(), 1);
    }

    #[test]
    fn keeps_geometric_groups_in_original_units() {
        // 6 at speed 1, 3 at speed 2, 1 at speed 4 (top = 4)
        let mut speeds = vec![rat(4, 1)];
        speeds.extend(std::iter::repeat_n(rat(2, 1), 3));
        speeds.extend(std::iter::repeat_n(rat(5, 4), 6));
        let r = related(speeds);
        let (g, s) = smooth_machines(&r);
        assert_eq!(g.groups.len(), 3);
        assert_eq!(g.groups[0].speed, rat(1, 1));
        assert_eq!(g.groups[0].len(), 6);
        assert_eq!(g.groups[2].speed, rat(4, 1));
        assert_eq!(s.speeds[0], rat(4, 1));
        g.check(10).unwrap();
    }

    #[test]
    fn scan_compares_against_surviving_group() {
        // counts slow->fast 3, 2, 3
        let mut speeds = vec![rat(1, 1); 3];
        speeds.extend(vec![rat(1, 2); 2]);
        speeds.extend(vec![rat(1, 4); 3]);
        let (g, _) = smooth_machines(&related(speeds));
        g.check(8).unwrap();
        assert_eq!(g.groups.len(), 1);
    }
}
