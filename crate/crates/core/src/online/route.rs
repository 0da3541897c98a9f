use std::collections::BTreeSet;

use super::double::{guess_and_double, Attempt, OnlineRun};
use super::potential::PotentialState;
use crate::error::{Error, Result};
use crate::instance::{RoutingInstance, RoutingView};
use crate::stoch::Rational;

/// Relative tolerance under which two potential increases count as equal.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum RouteStep {
    Commit { path: Vec<usize>, delta: f64, proxy: Vec<(usize, f64)> },
    /// The best path breaches the cap.
    Fail { path: Vec<usize>, delta: f64 },
}

/// Proxy of routing request `j` along `path`: the exceptional part at the
/// bottleneck on index 0 and the truncated load of edge `e` on `e + 1`.
pub fn path_proxy(view: &RoutingView<'_>, j: usize, path: &[usize]) -> Vec<(usize, f64)> {
    let mut p = Vec::with_capacity(path.len() + 1);
    let exc = view.path_exceptional(j, path);
    if exc != 0.0 {
        p.push((0, exc));
    }
    for &e in path {
        let t = view.truncated_load(j, e);
        if t != 0.0 {
            p.push((e + 1, t));
        }
    }
    p
}

fn better(view: &RoutingView<'_>, j: usize, cand: (f64, &[usize]), best: Option<(f64, &[usize])>) -> bool {
    let Some((bd, bp)) = best else { return true };
    let (cd, cp) = cand;
    let tol = TIE_TOL * bd.abs().max(cd.abs()).max(1.0);
    if cd < bd - tol {
        return true;
    }
    if cd > bd + tol {
        return false;
    }
    view.vertex_sequence(j, cp) < view.vertex_sequence(j, bp)
}

/// Finds the admissible path minimizing the potential increase by guessing
/// the bottleneck capacity and running a shortest path search on the edges
/// at least that wide. Fails with `NoFeasiblePath` if no admissible path
/// exists. The view must be built at `state.tau`.
pub fn best_route(view: &RoutingView<'_>, state: &PotentialState, j: usize) -> Result<(Vec<usize>, f64)> {
    debug_assert_eq!(view.tau(), &state.tau);
    let inst = view.instance();
    let req = &inst.requests[j];
    let tau = state.tau_f64;
    let load = &state.load;
    let caps: BTreeSet<&Rational> = view
        .admissible_edges(j)
        .into_iter()
        .map(|e| &inst.edges[e].capacity)
        .collect();
    let weight = |e: usize| {
        let l = load[e + 1];
        super::BASE.powf((l + view.truncated_load(j, e)) / tau) - super::BASE.powf(l / tau)
    };
    let mut best: Option<(f64, Vec<usize>)> = None;
    for cap in caps {
        let allowed = |e: usize| view.is_admissible(j, e) && &inst.edges[e].capacity >= cap;
        let Some((_, path)) = view.graph().shortest_path(req.source, req.sink, allowed, weight) else {
            continue;
        };
        let d = state.delta(&path_proxy(view, j, &path));
        if better(view, j, (d, &path), best.as_ref().map(|(d, p)| (*d, p.as_slice()))) {
            best = Some((d, path));
        }
    }
    best.map(|(d, p)| (p, d)).ok_or(Error::NoFeasiblePath { request: j })
}

/// Exhaustive reference: the minimum over every admissible simple path.
pub fn best_route_brute_force(view: &RoutingView<'_>, state: &PotentialState, j: usize) -> Result<(Vec<usize>, f64)> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for path in view.paths(j) {
        let d = state.delta(&path_proxy(view, j, &path));
        if better(view, j, (d, &path), best.as_ref().map(|(d, p)| (*d, p.as_slice()))) {
            best = Some((d, path));
        }
    }
    best.map(|(d, p)| (p, d)).ok_or(Error::NoFeasiblePath { request: j })
}

/// One online routing step: best path, then the cap check. Commits on success.
pub fn online_route_step(view: &RoutingView<'_>, state: &mut PotentialState, j: usize) -> Result<RouteStep> {
    let (path, delta) = best_route(view, state, j)?;
    let proxy = path_proxy(view, j, &path);
    if !state.admits(&proxy) {
        return Ok(RouteStep::Fail { path, delta });
    }
    state.load.add(&proxy);
    Ok(RouteStep::Commit { path, delta, proxy })
}

/// `min_P E[max_{e in P} X_j / c_e]` together with a widest path.
fn widest_route(r: &RoutingInstance, j: usize) -> (Rational, Vec<usize>) {
    let g = r.graph();
    let req = &r.requests[j];
    let caps: BTreeSet<&Rational> = r.edges.iter().map(|e| &e.capacity).collect();
    for cap in caps.into_iter().rev() {
        if let Some((_, path)) = g.shortest_path(req.source, req.sink, |e| &r.edges[e].capacity >= cap, |_| 1.0) {
            return (req.demand.mean() / cap.clone(), path);
        }
    }
    unreachable!("validated instance has a path for every request")
}

/// Online routing with guess-and-double. Choices are edge id sequences.
pub fn online_routing(r: &RoutingInstance) -> Result<OnlineRun<Vec<usize>>> {
    let mut view: Option<RoutingView<'_>> = None;
    guess_and_double(
        r.requests.len(),
        r.m(),
        |j| Ok(widest_route(r, j)),
        |st, j| {
            if view.as_ref().is_none_or(|v| v.tau() != &st.tau) {
                view = Some(RoutingView::new(r, &st.tau));
            }
            let v = view.as_ref().expect("view built above");
            match online_route_step(v, st, j) {
                Ok(RouteStep::Commit { path, delta, proxy }) => Ok(Attempt::Commit {
                    choice: path,
                    proxy,
                    delta,
                }),
                Ok(RouteStep::Fail { .. }) | Err(Error::NoFeasiblePath { .. }) => Ok(Attempt::Fail),
                Err(e) => Err(e),
            }
        },
    )
}
