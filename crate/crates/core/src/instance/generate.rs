use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;

use super::{
    ConfigInstance, Configuration, Edge, Instance, RelatedInstance, Request, RoutingInstance,
    RoutingRequest, UnrelatedInstance,
};
use crate::error::{Error, Result};
use crate::stoch::{rat, ExactDist, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InstanceKind {
    Config,
    Unrelated,
    Related,
    Routing,
}

impl InstanceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InstanceKind::Config => "config",
            InstanceKind::Unrelated => "unrelated",
            InstanceKind::Related => "related",
            InstanceKind::Routing => "routing",
        }
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "config" => Ok(InstanceKind::Config),
            "unrelated" => Ok(InstanceKind::Unrelated),
            "related" => Ok(InstanceKind::Related),
            "routing" => Ok(InstanceKind::Routing),
            other => Err(Error::field("kind", format!("unknown instance kind `{other}`"))),
        }
    }
}

/// One fast machine, `m - 1` slow machines of speed `1/(tau m)`, one job
/// `tau * Ber(1/tau)` and `m - 1` deterministic jobs of size `1/m`.
pub fn gen_adaptivity_gap_instance(m: usize, tau: &Rational) -> Result<RelatedInstance> {
    if m < 2 {
        return Err(Error::Precondition(format!("need m >= 2, got {m}")));
    }
    if tau <= &Rational::one() {
        return Err(Error::Precondition(format!("need tau > 1, got {tau}")));
    }
    let mr = Rational::from_integer(m.into());
    let slow = (tau.clone() * mr.clone()).recip();
    let mut speeds = vec![Rational::one()];
    speeds.extend(std::iter::repeat_n(slow, m - 1));
    let mut jobs = vec![ExactDist::scaled_bernoulli(tau.clone(), tau.recip())?];
    jobs.extend(std::iter::repeat_n(ExactDist::point(mr.recip()), m - 1));
    RelatedInstance::new(speeds, jobs)
}

/// Exact `sqrt(m)` when `m` is a perfect square, otherwise the nearest float.
pub fn sqrt_rational(m: usize) -> Rational {
    let r = (m as f64).sqrt().round() as usize;
    if r * r == m {
        Rational::from_integer(r.into())
    } else {
        Rational::from_float((m as f64).sqrt()).expect("finite")
    }
}

/// One machine of speed 1 and `m - 1` of speed `1/sqrt(m)`; the job pool is
/// one job of size 1 followed by `m - 1` jobs of size `1/sqrt(m)`. Which job
/// is revealed when is decided by the adversary, not by this order.
pub fn gen_clairvoyance_adversary_instance(m: usize) -> Result<RelatedInstance> {
    if m == 0 {
        return Err(Error::Precondition("need m >= 1".into()));
    }
    let small = sqrt_rational(m).recip();
    let mut speeds = vec![Rational::one()];
    speeds.extend(std::iter::repeat_n(small.clone(), m - 1));
    let mut jobs = vec![ExactDist::point(Rational::one())];
    jobs.extend(std::iter::repeat_n(ExactDist::point(small), m - 1));
    RelatedInstance::new(speeds, jobs)
}

/// Bounds for [`random_tiny_instance`].
#[derive(Clone, Debug, PartialEq)]
pub struct TinyParams {
    pub kind: InstanceKind,
    pub n: usize,
    pub m: usize,
    /// Configurations per request (config kind only).
    pub q: usize,
    /// Support size of each law.
    pub support: usize,
}

impl TinyParams {
    pub fn new(kind: InstanceKind, n: usize, m: usize, q: usize, support: usize) -> Self {
        Self {
            kind,
            n,
            m,
            q,
            support,
        }
    }
}

/// Random law with `1..=support` distinct values in `{0, 1/2, ..., 3}`, at
/// least one of them positive, and rational probabilities from integer weights.
pub fn random_law<R: Rng + ?Sized>(rng: &mut R, support: usize) -> ExactDist {
    let k = rng.random_range(1..=support.max(1));
    let mut values: Vec<i64> = Vec::with_capacity(k);
    while values.len() < k {
        let v = rng.random_range(0..=6);
        if !values.contains(&v) {
            values.push(v);
        }
    }
    if values.iter().all(|&v| v == 0) {
        values[0] = rng.random_range(1..=6);
    }
    let weights: Vec<i64> = (0..k).map(|_| rng.random_range(1..=3)).collect();
    let total: i64 = weights.iter().sum();
    ExactDist::new(
        values
            .into_iter()
            .zip(weights)
            .map(|(v, w)| (rat(v, 2), rat(w, total))),
    )
    .expect("generated law is valid")
}

fn random_multiplier<R: Rng + ?Sized>(rng: &mut R) -> Rational {
    [rat(0, 1), rat(1, 2), rat(1, 1), rat(2, 1)][rng.random_range(0..4)].clone()
}

/// Small random instance for the exact oracle. Values are multiples of `1/2`,
/// multipliers and speeds come from small fixed sets so realized loads stay in
/// a small lattice.
pub fn random_tiny_instance<R: Rng + ?Sized>(params: &TinyParams, rng: &mut R) -> Result<Instance> {
    let TinyParams { kind, n, m, q, support } = *params;
    if m == 0 || n == 0 {
        return Err(Error::Precondition("tiny instances need n, m >= 1".into()));
    }
    match kind {
        InstanceKind::Config => {
            let requests = (0..n)
                .map(|j| {
                    let qj = rng.random_range(1..=q.max(1));
                    let configs = (0..qj)
                        .map(|_| {
                            let mut mult: Vec<Rational> = (0..m).map(|_| random_multiplier(rng)).collect();
                            if mult.iter().all(Zero::is_zero) {
                                mult[rng.random_range(0..m)] = Rational::one();
                            }
                            Configuration::new(mult, random_law(rng, support))
                        })
                        .collect();
                    Request { id: j, configs }
                })
                .collect();
            Ok(Instance::Config(ConfigInstance::new(m, requests)?))
        }
        InstanceKind::Unrelated => {
            let jobs = (0..n)
                .map(|_| (0..m).map(|_| random_law(rng, support)).collect())
                .collect();
            Ok(Instance::Unrelated(UnrelatedInstance::new(m, jobs)?))
        }
        InstanceKind::Related => {
            let speeds = (0..m)
                .map(|_| [rat(1, 1), rat(1, 2), rat(1, 4), rat(2, 1)][rng.random_range(0..4)].clone())
                .collect();
            let jobs = (0..n).map(|_| random_law(rng, support)).collect();
            Ok(Instance::Related(RelatedInstance::new(speeds, jobs)?))
        }
        InstanceKind::Routing => Ok(Instance::Routing(random_routing_instance(
            &RoutingParams {
                vertices: m.max(2),
                max_edges: (2 * m).max(1),
                requests: n,
                support,
            },
            rng,
        )?)),
    }
}

/// Bounds for [`random_routing_instance`].
#[derive(Clone, Debug, PartialEq)]
pub struct RoutingParams {
    pub vertices: usize,
    pub max_edges: usize,
    pub requests: usize,
    pub support: usize,
}

/// Random DAG on `vertices` nodes. The chain `0 -> 1 -> ... -> n-1` is always
/// present so every forward request is routable; extra forward edges are added
/// until `max_edges`. Capacities are drawn from `{1/2, 1, 2}`.
pub fn random_routing_instance<R: Rng + ?Sized>(params: &RoutingParams, rng: &mut R) -> Result<RoutingInstance> {
    let n = params.vertices;
    if n < 2 {
        return Err(Error::Precondition("routing needs at least 2 vertices".into()));
    }
    if params.max_edges < n - 1 {
        return Err(Error::Precondition(format!(
            "max_edges {} cannot hold the {}-edge chain",
            params.max_edges,
            n - 1
        )));
    }
    let caps = [rat(1, 2), rat(1, 1), rat(2, 1)];
    let mut pairs: Vec<(usize, usize)> = (0..n - 1).map(|v| (v, v + 1)).collect();
    let mut candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 2..n).map(move |v| (u, v)))
        .collect();
    let extra = rng.random_range(0..=(params.max_edges - (n - 1)).min(candidates.len()));
    for _ in 0..extra {
        let k = rng.random_range(0..candidates.len());
        pairs.push(candidates.swap_remove(k));
    }
    pairs.sort_unstable();
    let edges = pairs
        .into_iter()
        .map(|(tail, head)| Edge {
            tail,
            head,
            capacity: caps[rng.random_range(0..caps.len())].clone(),
        })
        .collect();
    let requests = (0..params.requests)
        .map(|_| {
            let source = rng.random_range(0..n - 1);
            let sink = rng.random_range(source + 1..n);
            RoutingRequest {
                source,
                sink,
                demand: random_law(rng, params.support),
            }
        })
        .collect();
    RoutingInstance::new(n, edges, requests)
}

/// Speeds spread over several orders of magnitude, for smoothing tests.
pub fn random_speeds<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<Rational> {
    (0..m)
        .map(|_| {
            let base = Rational::new(BigInt::from(rng.random_range(1..=1000)), BigInt::from(1000));
            let shift: u32 = rng.random_range(0..12);
            base / Rational::from_integer(BigInt::from(1u64 << shift))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn adaptivity_gap_family() {
        let r = gen_adaptivity_gap_instance(4, &rat(2, 1)).unwrap();
        assert_eq!(r.speeds, vec![rat(1, 1), rat(1, 8), rat(1, 8), rat(1, 8)]);
        assert_eq!(
            r.jobs[0],
            ExactDist::new([(rat(0, 1), rat(1, 2)), (rat(2, 1), rat(1, 2))]).unwrap()
        );
        assert!(r.jobs[1..].iter().all(|d| *d == ExactDist::point(rat(1, 4))));
        assert_eq!(r.jobs.len(), 4);

        let r = gen_adaptivity_gap_instance(2, &rat(2, 1)).unwrap();
        assert_eq!(r.speeds, vec![rat(1, 1), rat(1, 4)]);
        assert_eq!(r.jobs[1], ExactDist::point(rat(1, 2)));

        assert!(gen_adaptivity_gap_instance(1, &rat(2, 1)).is_err());
        assert!(gen_adaptivity_gap_instance(3, &rat(1, 1)).is_err());
    }

    #[test]
    fn clairvoyance_family() {
        let r = gen_clairvoyance_adversary_instance(4).unwrap();
        assert_eq!(r.speeds, vec![rat(1, 1), rat(1, 2), rat(1, 2), rat(1, 2)]);
        let sizes: Vec<Rational> = r.jobs.iter().map(|d| d.mean()).collect();
        assert_eq!(sizes, vec![rat(1, 1), rat(1, 2), rat(1, 2), rat(1, 2)]);
        let one = gen_clairvoyance_adversary_instance(1).unwrap();
        assert_eq!(one.speeds.len(), 1);
    }

    #[test]
    fn tiny_instances_are_reproducible() {
        let params = TinyParams::new(InstanceKind::Config, 3, 2, 2, 2);
        let a = random_tiny_instance(&params, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let b = random_tiny_instance(&params, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(a, b);

        let one = TinyParams::new(InstanceKind::Config, 1, 1, 1, 3);
        let Instance::Config(c) = random_tiny_instance(&one, &mut ChaCha8Rng::seed_from_u64(5)).unwrap() else {
            panic!("wrong kind");
        };
        assert_eq!((c.m, c.requests.len()), (1, 1));
    }

    #[test]
    fn tiny_laws_are_exact_and_nontrivial() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let d = random_law(&mut rng, 3);
            let total = d.support().iter().fold(Rational::zero(), |acc, (_, p)| acc + p);
            assert!(total.is_one());
            assert!(d.max_value() > &Rational::zero());
            assert!(d.len() <= 3);
        }
    }

    #[test]
    fn routing_dags_stay_small_and_routable() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let params = RoutingParams {
                vertices: 5,
                max_edges: 12,
                requests: 2,
                support: 2,
            };
            let r = random_routing_instance(&params, &mut rng).unwrap();
            assert!(r.edges.len() <= 12);
            assert!(r.edges.iter().all(|e| e.tail < e.head));
        }
    }
}
