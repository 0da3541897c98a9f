//! Offline algorithms: threshold search on the configuration or path LP,
//! independent randomized rounding, and the related-machines policy that
//! list-schedules inside speed groups.

use num_traits::Zero;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{related_to_unrelated, smooth_machines, unrelated_to_config, ConfigInstance, RelatedInstance, RoutingInstance, RoutingView, SmoothedGroups};
use crate::lp::{bisect_tau, lpc_upper_bracket, min_feasible_tau, solve_lpp_column_generation, FractionalSolution, TauSearch};
use crate::online::GroupListPolicy;
use crate::stoch::{Rational, Scalar};

/// Relative precision of the threshold search.
pub const DEFAULT_EPS: f64 = 1e-3;

/// One independent draw per request with probabilities `y*_{.j}`.
pub fn randomized_round<C: Clone, R: Rng + ?Sized>(sol: &FractionalSolution<C>, rng: &mut R) -> Vec<C> {
    sol.weights
        .iter()
        .map(|ws| {
            let dist = WeightedIndex::new(ws.iter().map(|(_, y)| y.max(0.0))).expect("request with positive weight");
            ws[dist.sample(rng)].0.clone()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NonAdaptiveAssignment {
    Configs { configs: Vec<usize> },
    /// Edge ids per request.
    Paths { paths: Vec<Vec<usize>> },
    /// Machine of the smoothed instance and its speed group, per job.
    Groups { machines: Vec<usize>, groups: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OfflineReport {
    pub algorithm: String,
    pub tau: f64,
    pub tau_exact: String,
    pub lp_status: String,
    pub search_steps: usize,
    /// Largest threshold found infeasible; certifies `E[OPT] > infeasible_below / 2`.
    pub infeasible_below: f64,
    pub opt_lower_bound: f64,
    pub assignment: NonAdaptiveAssignment,
    /// `sum_j E[X^T_ij(c_j)]` per resource.
    pub truncated_loads: Vec<f64>,
    /// `sum_j E[max_i X^E_ij(c_j)]`.
    pub exceptional_total: f64,
    #[serde(skip)]
    pub tau_rational: Rational,
}

/// Expected truncated loads and total expected exceptional load of a fixed
/// assignment, summed exactly.
pub fn assignment_loads(inst: &ConfigInstance, tau: &Rational, configs: &[usize]) -> (Vec<f64>, f64) {
    let mut trunc = vec![Rational::zero(); inst.m];
    let mut exc = Rational::zero();
    for (j, &c) in configs.iter().enumerate() {
        let cfg = &inst.requests[j].configs[c];
        for (i, t) in trunc.iter_mut().enumerate() {
            *t += cfg.truncated_load(i, tau);
        }
        exc += cfg.exceptional_max(tau);
    }
    (trunc.iter().map(Scalar::to_f64).collect(), exc.to_f64())
}

/// Same for paths: per-edge truncated loads and bottleneck exceptional parts.
pub fn route_loads(view: &RoutingView<'_>, paths: &[Vec<usize>]) -> (Vec<f64>, f64) {
    let mut trunc = vec![0.0; view.instance().m()];
    let mut exc = 0.0;
    for (j, p) in paths.iter().enumerate() {
        for &e in p {
            trunc[e] += view.truncated_load(j, e);
        }
        exc += view.path_exceptional(j, p);
    }
    (trunc, exc)
}

fn report<S>(algorithm: &str, search: &TauSearch<S>, assignment: NonAdaptiveAssignment, loads: (Vec<f64>, f64)) -> OfflineReport {
    let lo = search.infeasible_below.to_f64();
    OfflineReport {
        algorithm: algorithm.into(),
        tau: search.tau.to_f64(),
        tau_exact: search.tau.to_string(),
        lp_status: "feasible".into(),
        search_steps: search.steps,
        infeasible_below: lo,
        opt_lower_bound: lo / 2.0,
        assignment,
        truncated_loads: loads.0,
        exceptional_total: loads.1,
        tau_rational: search.tau.clone(),
    }
}

/// Threshold search on LP_C followed by randomized rounding.
pub fn offline_config_balancing<R: Rng + ?Sized>(inst: &ConfigInstance, rng: &mut R) -> Result<(Vec<usize>, OfflineReport)> {
    let search = min_feasible_tau(inst, Rational::zero(), lpc_upper_bracket(inst), DEFAULT_EPS)?;
    let configs = randomized_round(&search.solution, rng);
    let loads = assignment_loads(inst, &search.tau, &configs);
    let rep = report("config", &search, NonAdaptiveAssignment::Configs { configs: configs.clone() }, loads);
    Ok((configs, rep))
}

/// `sum_j min_P E[max_{e in P} X_j / c_e]`, attained on widest paths.
pub fn lpp_upper_bracket(r: &RoutingInstance) -> Rational {
    let g = r.graph();
    let mut caps: Vec<&Rational> = r.edges.iter().map(|e| &e.capacity).collect();
    caps.sort();
    caps.dedup();
    let mut total = Rational::zero();
    for req in &r.requests {
        let widest = caps
            .iter()
            .rev()
            .find(|&&cap| g.reachable(req.source, req.sink, |e| &r.edges[e].capacity >= cap))
            .expect("validated instance has a path");
        total += req.demand.mean() / (*widest).clone();
    }
    total
}

/// Threshold search on LP_P by column generation, then per-request rounding
/// of path weights.
pub fn offline_routing<R: Rng + ?Sized>(r: &RoutingInstance, rng: &mut R) -> Result<(Vec<Vec<usize>>, OfflineReport)> {
    let search = bisect_tau(Rational::zero(), lpp_upper_bracket(r), DEFAULT_EPS, |t| {
        match solve_lpp_column_generation(r, t) {
            Ok(lp) if lp.feasible => Ok(lp.solution),
            Ok(_) | Err(Error::NoFeasiblePath { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let paths = randomized_round(&search.solution, rng);
    let view = RoutingView::new(r, &search.tau);
    let loads = route_loads(&view, &paths);
    let rep = report("routing", &search, NonAdaptiveAssignment::Paths { paths: paths.clone() }, loads);
    Ok((paths, rep))
}

/// Offline related machines: smoothing, the configuration algorithm on the
/// surviving machines, and list scheduling within the chosen speed groups.
/// The policy runs on the machines of the input instance.
pub struct OfflineRelated {
    pub groups: SmoothedGroups,
    pub smoothed: RelatedInstance,
    pub policy: GroupListPolicy,
    pub report: OfflineReport,
}

pub fn offline_related<R: Rng + ?Sized>(r: &RelatedInstance, rng: &mut R) -> Result<OfflineRelated> {
    let (groups, smoothed) = smooth_machines(r);
    let inst = unrelated_to_config(&related_to_unrelated(&smoothed));
    let (machines, mut report) = offline_config_balancing(&inst, rng)?;
    let group_of = groups.group_of();
    let job_group: Vec<usize> = machines.iter().map(|&i| group_of[i]).collect();
    report.algorithm = "related".into();
    report.assignment = NonAdaptiveAssignment::Groups {
        machines,
        groups: job_group.clone(),
    };
    Ok(OfflineRelated {
        policy: GroupListPolicy::on_original(&groups, job_group),
        groups,
        smoothed,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_adaptivity_gap_instance, Configuration, Edge, Request, RoutingRequest};
    use crate::stoch::{rat, ExactDist};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rounding_certain_and_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sure = FractionalSolution { weights: vec![vec![(0usize, 0.0), (1, 1.0)]] };
        assert_eq!(randomized_round(&sure, &mut rng), vec![1]);
        let half = FractionalSolution { weights: vec![vec![(0usize, 0.5), (1, 0.5)]] };
        let trials = 100_000;
        let ones = (0..trials).filter(|_| randomized_round(&half, &mut rng)[0] == 1).count();
        assert!((ones as f64 / trials as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn single_deterministic_job() {
        let inst = ConfigInstance::new(
            1,
            vec![Request { id: 0, configs: vec![Configuration::indicator(1, 0, ExactDist::point(rat(3, 1)))] }],
        )
        .unwrap();
        let (configs, rep) = offline_config_balancing(&inst, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(configs, vec![0]);
        assert!((rep.tau - 3.0).abs() <= 3.0 * DEFAULT_EPS);
        // 3 sits at or above tau, so it is exceptional
        assert_eq!(rep.exceptional_total + rep.truncated_loads[0], 3.0);
    }

    #[test]
    fn adaptivity_gap_instance_threshold() {
        let r = gen_adaptivity_gap_instance(4, &rat(2, 1)).unwrap();
        let inst = unrelated_to_config(&related_to_unrelated(&r));
        let (configs, rep) = offline_config_balancing(&inst, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(rep.tau <= 2.75);
        assert!(rep.opt_lower_bound < 1.375);
        let (t, e) = assignment_loads(&inst, &rep.tau_rational, &configs);
        assert_eq!((t, e), (rep.truncated_loads.clone(), rep.exceptional_total));
    }

    #[test]
    fn routing_triangle_threshold() {
        let r = RoutingInstance::new(
            3,
            vec![
                Edge { tail: 0, head: 2, capacity: rat(1, 2) },
                Edge { tail: 0, head: 1, capacity: rat(1, 1) },
                Edge { tail: 1, head: 2, capacity: rat(1, 1) },
            ],
            vec![RoutingRequest { source: 0, sink: 2, demand: ExactDist::point(rat(1, 1)) }],
        )
        .unwrap();
        let (paths, rep) = offline_routing(&r, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!((rep.tau - 1.0).abs() <= DEFAULT_EPS);
        assert_eq!(paths, vec![vec![1, 2]]);
    }

    #[test]
    fn related_single_machine_is_fixed() {
        let r = RelatedInstance::new(vec![rat(2, 1)], vec![ExactDist::point(rat(1, 1)); 2]).unwrap();
        let out = offline_related(&r, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out.policy.groups, vec![vec![0]]);
        assert_eq!(out.policy.job_group, vec![0, 0]);
    }
}
