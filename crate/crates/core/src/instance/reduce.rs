use num_traits::Zero;

use super::{ConfigInstance, Configuration, RelatedInstance, Request, RoutingInstance, UnrelatedInstance};
use crate::stoch::Rational;

/// One configuration per machine: configuration `c` loads only machine `c`
/// with that machine's law.
pub fn unrelated_to_config(u: &UnrelatedInstance) -> ConfigInstance {
    ConfigInstance {
        m: u.m,
        requests: u
            .jobs
            .iter()
            .enumerate()
            .map(|(j, laws)| Request {
                id: j,
                configs: laws
                    .iter()
                    .enumerate()
                    .map(|(i, law)| Configuration::indicator(u.m, i, law.clone()))
                    .collect(),
            })
            .collect(),
    }
}

/// `X_ij = X_j / s_i`.
pub fn related_to_unrelated(r: &RelatedInstance) -> UnrelatedInstance {
    let inverse: Vec<Rational> = r.speeds.iter().map(|s| s.recip()).collect();
    UnrelatedInstance {
        m: r.speeds.len(),
        jobs: r
            .jobs
            .iter()
            .map(|law| inverse.iter().map(|f| law.scale(f)).collect())
            .collect(),
    }
}

/// Explicit configuration instance with one configuration per simple
/// source-sink path (multiplier `1/c_e` on the path's edges). Exponential in
/// general; meant for small graphs and the exact oracle.
pub fn routing_to_enumerated_config(r: &RoutingInstance) -> ConfigInstance {
    let graph = r.graph();
    let m = r.m();
    ConfigInstance {
        m,
        requests: r
            .requests
            .iter()
            .enumerate()
            .map(|(j, req)| Request {
                id: j,
                configs: graph
                    .simple_paths(req.source, req.sink, |_| true)
                    .into_iter()
                    .map(|path| {
                        let mut multipliers = vec![Rational::zero(); m];
                        for e in path {
                            multipliers[e] = r.edges[e].capacity.recip();
                        }
                        Configuration::new(multipliers, req.demand.clone())
                    })
                    .collect(),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stoch::{rat, DiscreteDistribution};

    #[test]
    fn unrelated_reduction_uses_indicators() {
        let d1 = DiscreteDistribution::point(rat(1, 1));
        let d2 = DiscreteDistribution::new([(rat(0, 1), rat(1, 2)), (rat(3, 1), rat(1, 2))]).unwrap();
        let single = unrelated_to_config(&UnrelatedInstance::new(1, vec![vec![d1.clone()]]).unwrap());
        assert_eq!(single.requests.len(), 1);
        assert_eq!(single.requests[0].configs[0].multipliers, vec![rat(1, 1)]);

        let two = unrelated_to_config(&UnrelatedInstance::new(2, vec![vec![d1.clone(), d2.clone()]]).unwrap());
        let cfgs = &two.requests[0].configs;
        assert_eq!(cfgs[0], Configuration::new(vec![rat(1, 1), rat(0, 1)], d1));
        assert_eq!(cfgs[1], Configuration::new(vec![rat(0, 1), rat(1, 1)], d2));
    }

    #[test]
    fn related_reduction_divides_by_speed() {
        let r = RelatedInstance::new(vec![rat(1, 1)], vec![DiscreteDistribution::point(rat(2, 1))]).unwrap();
        assert_eq!(related_to_unrelated(&r).jobs[0][0], DiscreteDistribution::point(rat(2, 1)));

        let r = RelatedInstance::new(vec![rat(1, 1), rat(1, 8)], vec![DiscreteDistribution::point(rat(1, 1))]).unwrap();
        let u = related_to_unrelated(&r);
        assert_eq!(u.jobs[0], vec![DiscreteDistribution::point(rat(1, 1)), DiscreteDistribution::point(rat(8, 1))]);

        let law = DiscreteDistribution::new([(rat(0, 1), rat(1, 2)), (rat(4, 1), rat(1, 2))]).unwrap();
        let r = RelatedInstance::new(vec![rat(2, 1)], vec![law]).unwrap();
        let expected = DiscreteDistribution::new([(rat(0, 1), rat(1, 2)), (rat(2, 1), rat(1, 2))]).unwrap();
        assert_eq!(related_to_unrelated(&r).jobs[0][0], expected);
    }
}
