//! Problem instances for the four supported variants, the reductions between
//! them, machine smoothing, generators and the instance file format.

mod generate;
mod io;
mod reduce;
mod routing;
mod smooth;
mod table;

pub use generate::{
    gen_adaptivity_gap_instance, gen_clairvoyance_adversary_instance, random_routing_instance,
    random_law, random_speeds, random_tiny_instance, sqrt_rational, InstanceKind, RoutingParams,
    TinyParams,
};
pub use io::{parse_instance, parse_rational, read_instance, render_instance, write_instance};
pub use reduce::{related_to_unrelated, routing_to_enumerated_config, unrelated_to_config};
pub use routing::{routing_to_config, RoutingView};
pub use smooth::{smooth_machines, SmoothedGroups, SpeedGroup};
pub use table::{Choice, ChoiceTable, ToChoiceTable};

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::stoch::{ExactDist, Rational};

/// One way of serving a request: resource `i` receives `multipliers[i] * X`
/// where `X` is drawn from `law`.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    pub multipliers: Vec<Rational>,
    pub law: ExactDist,
}

impl Configuration {
    pub fn new(multipliers: Vec<Rational>, law: ExactDist) -> Self {
        Self { multipliers, law }
    }

    /// Load `law` on resource `i` only.
    pub fn indicator(m: usize, i: usize, law: ExactDist) -> Self {
        let mut multipliers = vec![Rational::zero(); m];
        multipliers[i] = Rational::from_integer(1.into());
        Self { multipliers, law }
    }

    pub fn max_multiplier(&self) -> Rational {
        self.multipliers
            .iter()
            .max()
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// `E[max_i X_i(c)]`.
    pub fn expected_max(&self) -> Rational {
        self.max_multiplier() * self.law.mean()
    }

    /// `E[X_i^T(c)]` at threshold `tau`.
    pub fn truncated_load(&self, i: usize, tau: &Rational) -> Rational {
        self.law.scaled_truncated_mean(&self.multipliers[i], tau)
    }

    /// `E[max_i X_i^E(c)]` at threshold `tau`.
    pub fn exceptional_max(&self, tau: &Rational) -> Rational {
        self.law.scaled_exceptional_mean(&self.max_multiplier(), tau)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Request {
    pub id: usize,
    pub configs: Vec<Configuration>,
}

/// Generic configuration balancing instance over `m` resources.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigInstance {
    pub m: usize,
    pub requests: Vec<Request>,
}

impl ConfigInstance {
    pub fn new(m: usize, requests: Vec<Request>) -> Result<Self> {
        let inst = Self { m, requests };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Validation("instance needs at least one resource".into()));
        }
        for (j, req) in self.requests.iter().enumerate() {
            if req.configs.is_empty() {
                return Err(Error::Validation(format!("request {j} has no configurations")));
            }
            for (c, cfg) in req.configs.iter().enumerate() {
                if cfg.multipliers.len() != self.m {
                    return Err(Error::Validation(format!(
                        "request {j} configuration {c} has {} multipliers, expected {}",
                        cfg.multipliers.len(),
                        self.m
                    )));
                }
                if cfg.multipliers.iter().any(|a| a.is_negative()) {
                    return Err(Error::Validation(format!(
                        "request {j} configuration {c} has a negative multiplier"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Related machines: job `j` takes `X_j / s_i` on machine `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct RelatedInstance {
    pub speeds: Vec<Rational>,
    pub jobs: Vec<ExactDist>,
}

impl RelatedInstance {
    pub fn new(speeds: Vec<Rational>, jobs: Vec<ExactDist>) -> Result<Self> {
        let inst = Self { speeds, jobs };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.speeds.is_empty() {
            return Err(Error::Validation("instance needs at least one machine".into()));
        }
        if let Some(i) = self.speeds.iter().position(|s| !s.is_positive()) {
            return Err(Error::Validation(format!("machine {i} has nonpositive speed")));
        }
        Ok(())
    }

    pub fn machines(&self) -> usize {
        self.speeds.len()
    }
}

/// Unrelated machines: `jobs[j][i]` is the law of job `j` if run on machine
/// `i`. Only one entry per job is ever realized.
#[derive(Clone, Debug, PartialEq)]
pub struct UnrelatedInstance {
    pub m: usize,
    pub jobs: Vec<Vec<ExactDist>>,
}

impl UnrelatedInstance {
    pub fn new(m: usize, jobs: Vec<Vec<ExactDist>>) -> Result<Self> {
        let inst = Self { m, jobs };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Validation("instance needs at least one machine".into()));
        }
        if let Some(j) = self.jobs.iter().position(|laws| laws.len() != self.m) {
            return Err(Error::Validation(format!(
                "job {j} lists {} machine laws, expected {}",
                self.jobs[j].len(),
                self.m
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub capacity: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoutingRequest {
    pub source: usize,
    pub sink: usize,
    pub demand: ExactDist,
}

/// Virtual circuit routing on a directed graph. Routing request `j` along
/// path `P` adds `X_j / c_e` to every edge `e` of `P`.
#[derive(Clone, Debug, PartialEq)]
pub struct RoutingInstance {
    pub vertices: usize,
    pub edges: Vec<Edge>,
    pub requests: Vec<RoutingRequest>,
}

impl RoutingInstance {
    pub fn new(vertices: usize, edges: Vec<Edge>, requests: Vec<RoutingRequest>) -> Result<Self> {
        let inst = Self {
            vertices,
            edges,
            requests,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.edges.is_empty() {
            return Err(Error::Validation("routing instance has no edges".into()));
        }
        for (e, edge) in self.edges.iter().enumerate() {
            if edge.tail >= self.vertices || edge.head >= self.vertices {
                return Err(Error::Validation(format!("edge {e} has an endpoint out of range")));
            }
            if edge.tail == edge.head {
                return Err(Error::Validation(format!("edge {e} is a self-loop")));
            }
            if !edge.capacity.is_positive() {
                return Err(Error::Validation(format!("edge {e} has nonpositive capacity")));
            }
        }
        let graph = self.graph();
        for (j, req) in self.requests.iter().enumerate() {
            if req.source >= self.vertices || req.sink >= self.vertices {
                return Err(Error::Validation(format!("request {j} has an endpoint out of range")));
            }
            if req.source == req.sink {
                return Err(Error::Validation(format!("request {j} has source equal to sink")));
            }
            if !graph.reachable(req.source, req.sink, |_| true) {
                return Err(Error::NoFeasiblePath { request: j });
            }
        }
        Ok(())
    }

    /// Number of resources (edges).
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn graph(&self) -> Digraph<'_> {
        Digraph::new(self.vertices, &self.edges)
    }
}

/// Any supported instance, as stored in instance files.
#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Config(ConfigInstance),
    Unrelated(UnrelatedInstance),
    Related(RelatedInstance),
    Routing(RoutingInstance),
}

impl Instance {
    pub fn kind(&self) -> InstanceKind {
        match self {
            Instance::Config(_) => InstanceKind::Config,
            Instance::Unrelated(_) => InstanceKind::Unrelated,
            Instance::Related(_) => InstanceKind::Related,
            Instance::Routing(_) => InstanceKind::Routing,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Instance::Config(i) => i.validate(),
            Instance::Unrelated(i) => i.validate(),
            Instance::Related(i) => i.validate(),
            Instance::Routing(i) => i.validate(),
        }
    }

    /// Explicit configuration view. Routing instances enumerate every simple
    /// path, which is only sensible for small graphs.
    pub fn to_config(&self) -> ConfigInstance {
        match self {
            Instance::Config(i) => i.clone(),
            Instance::Unrelated(i) => unrelated_to_config(i),
            Instance::Related(i) => unrelated_to_config(&related_to_unrelated(i)),
            Instance::Routing(i) => routing_to_enumerated_config(i),
        }
    }

    pub fn choice_table(&self) -> ChoiceTable {
        match self {
            Instance::Config(i) => i.choice_table(),
            Instance::Unrelated(i) => i.choice_table(),
            Instance::Related(i) => i.choice_table(),
            Instance::Routing(i) => routing_to_enumerated_config(i).choice_table(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stoch::{rat, DiscreteDistribution};

    #[test]
    fn configuration_moments() {
        let law = DiscreteDistribution::new([(rat(1, 1), rat(1, 2)), (rat(2, 1), rat(1, 2))]).unwrap();
        let cfg = Configuration::new(vec![rat(1, 1)], law);
        let tau = rat(2, 1);
        assert_eq!(cfg.truncated_load(0, &tau), rat(1, 2));
        assert_eq!(cfg.exceptional_max(&tau), rat(1, 1));
        assert_eq!(cfg.expected_max(), rat(3, 2));
    }

    #[test]
    fn validation_catches_shape_errors() {
        let law = DiscreteDistribution::point(rat(1, 1));
        let bad = ConfigInstance {
            m: 2,
            requests: vec![Request {
                id: 0,
                configs: vec![Configuration::new(vec![rat(1, 1)], law.clone())],
            }],
        };
        assert!(bad.validate().is_err());
        assert!(RelatedInstance::new(vec![rat(0, 1)], vec![law.clone()]).is_err());
        assert!(UnrelatedInstance::new(2, vec![vec![law.clone()]]).is_err());
    }

    #[test]
    fn routing_rejects_degenerate_requests() {
        let law = DiscreteDistribution::point(rat(1, 1));
        let edges = vec![Edge { tail: 0, head: 1, capacity: rat(1, 1) }];
        let same = RoutingInstance::new(
            2,
            edges.clone(),
            vec![RoutingRequest { source: 0, sink: 0, demand: law.clone() }],
        );
        assert!(matches!(same, Err(Error::Validation(_))));
        let unreachable = RoutingInstance::new(
            2,
            edges,
            vec![RoutingRequest { source: 1, sink: 0, demand: law }],
        );
        assert!(matches!(unreachable, Err(Error::NoFeasiblePath { request: 0 })));
    }
}
