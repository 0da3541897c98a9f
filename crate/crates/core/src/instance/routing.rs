use super::{Configuration, RoutingInstance};
use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::stoch::{Rational, Scalar};

use num_traits::Zero;

/// Implicit configuration view of a routing instance at a fixed threshold.
///
/// Request `j` may only use its admissible edges `E_j = {e : E[X_j / c_e] <= tau}`;
/// each `s_j`-`t_j` path in `(V, E_j)` is one configuration. Paths are never
/// materialized unless [`RoutingView::paths`] is called.
pub struct RoutingView<'a> {
    instance: &'a RoutingInstance,
    graph: Digraph<'a>,
    tau: Rational,
    admissible: Vec<Vec<bool>>,
    truncated: Vec<Vec<f64>>,
}

impl<'a> RoutingView<'a> {
    pub fn new(instance: &'a RoutingInstance, tau: &Rational) -> Self {
        let mut admissible = Vec::with_capacity(instance.requests.len());
        let mut truncated = Vec::with_capacity(instance.requests.len());
        for req in &instance.requests {
            let mean = req.demand.mean();
            admissible.push(
                instance
                    .edges
                    .iter()
                    .map(|e| mean.clone() / e.capacity.clone() <= *tau)
                    .collect(),
            );
            truncated.push(
                instance
                    .edges
                    .iter()
                    .map(|e| req.demand.scaled_truncated_mean(&e.capacity.recip(), tau).to_f64())
                    .collect(),
            );
        }
        Self {
            instance,
            graph: instance.graph(),
            tau: tau.clone(),
            admissible,
            truncated,
        }
    }

    pub fn instance(&self) -> &'a RoutingInstance {
        self.instance
    }

    pub fn graph(&self) -> &Digraph<'a> {
        &self.graph
    }

    pub fn tau(&self) -> &Rational {
        &self.tau
    }

    pub fn requests(&self) -> usize {
        self.instance.requests.len()
    }

    pub fn is_admissible(&self, request: usize, edge: usize) -> bool {
        self.admissible[request][edge]
    }

    pub fn admissible_edges(&self, request: usize) -> Vec<usize> {
        (0..self.instance.edges.len())
            .filter(|&e| self.admissible[request][e])
            .collect()
    }

    pub fn has_path(&self, request: usize) -> bool {
        let req = &self.instance.requests[request];
        self.graph
            .reachable(req.source, req.sink, |e| self.admissible[request][e])
    }

    /// Every admissible simple path of a request, lexicographic by vertex
    /// sequence.
    pub fn paths(&self, request: usize) -> Vec<Vec<usize>> {
        let req = &self.instance.requests[request];
        self.graph
            .simple_paths(req.source, req.sink, |e| self.admissible[request][e])
    }

    /// `E[(X_j / c_e)^T]` as a float.
    pub fn truncated_load(&self, request: usize, edge: usize) -> f64 {
        self.truncated[request][edge]
    }

    pub fn truncated_loads(&self, request: usize) -> &[f64] {
        &self.truncated[request]
    }

    pub fn bottleneck(&self, path: &[usize]) -> Rational {
        path.iter()
            .map(|&e| self.instance.edges[e].capacity.clone())
            .min()
            .expect("nonempty path")
    }

    /// `E[max_{e in P} (X_j / c_e)^E]`, attained at the smallest-capacity edge.
    pub fn path_exceptional(&self, request: usize, path: &[usize]) -> f64 {
        self.exceptional_at_capacity(request, &self.bottleneck(path))
    }

    pub fn exceptional_at_capacity(&self, request: usize, capacity: &Rational) -> f64 {
        self.instance.requests[request]
            .demand
            .scaled_exceptional_mean(&capacity.recip(), &self.tau)
            .to_f64()
    }

    pub fn path_configuration(&self, request: usize, path: &[usize]) -> Configuration {
        let mut multipliers = vec![Rational::zero(); self.instance.edges.len()];
        for &e in path {
            multipliers[e] = self.instance.edges[e].capacity.recip();
        }
        Configuration::new(multipliers, self.instance.requests[request].demand.clone())
    }

    pub fn vertex_sequence(&self, request: usize, path: &[usize]) -> Vec<usize> {
        self.graph
            .vertex_sequence(self.instance.requests[request].source, path)
    }
}

/// Builds the implicit configuration view and checks every request still has
/// an admissible path.
pub fn routing_to_config<'a>(r: &'a RoutingInstance, tau: &Rational) -> Result<RoutingView<'a>> {
    let view = RoutingView::new(r, tau);
    for j in 0..view.requests() {
        if !view.has_path(j) {
            return Err(Error::NoFeasiblePath { request: j });
        }
    }
    Ok(view)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Edge, RoutingRequest};
    use crate::stoch::{rat, DiscreteDistribution};

    pub(crate) fn triangle() -> RoutingInstance {
        RoutingInstance::new(
            3,
            vec![
                Edge { tail: 0, head: 1, capacity: rat(1, 1) },
                Edge { tail: 1, head: 2, capacity: rat(1, 1) },
                Edge { tail: 0, head: 2, capacity: rat(1, 2) },
            ],
            vec![RoutingRequest { source: 0, sink: 2, demand: DiscreteDistribution::point(rat(1, 1)) }],
        )
        .unwrap()
    }

    #[test]
    fn tight_threshold_drops_thin_edge() {
        let r = triangle();
        let view = routing_to_config(&r, &rat(3, 2)).unwrap();
        assert_eq!(view.admissible_edges(0), vec![0, 1]);
        let paths = view.paths(0);
        assert_eq!(paths.len(), 1);
        assert_eq!(view.vertex_sequence(0, &paths[0]), vec![0, 1, 2]);
    }

    #[test]
    fn loose_threshold_admits_both_paths() {
        let r = triangle();
        let view = routing_to_config(&r, &rat(3, 1)).unwrap();
        assert_eq!(view.paths(0).len(), 2);
        assert_eq!(view.path_exceptional(0, &[2]), 0.0);
        assert_eq!(view.truncated_load(0, 2), 2.0);
    }

    #[test]
    fn disconnecting_threshold_is_reported() {
        let r = triangle();
        assert!(matches!(
            routing_to_config(&r, &rat(1, 2)),
            Err(Error::NoFeasiblePath { request: 0 })
        ));
    }

    #[test]
    fn path_configuration_uses_inverse_capacities() {
        let r = triangle();
        let view = RoutingView::new(&r, &rat(3, 1));
        let cfg = view.path_configuration(0, &[2]);
        assert_eq!(cfg.multipliers, vec![rat(0, 1), rat(0, 1), rat(2, 1)]);
    }
}
