use rayon::prelude::*;
use serde::Serialize;

use super::{solve_feasibility, DenseSimplex, Feasibility, FractionalSolution, LinearProgram, LpSolver, LpStatus, Sense, FEAS_TOL};
use crate::error::{Error, Result};
use crate::instance::{RoutingInstance, RoutingView};
use crate::stoch::{Rational, Scalar};

/// A point `(a, b, c)` of the dual of the path LP.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPoint {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Separation {
    Feasible,
    NegativeEdgeDual { edge: usize },
    NegativeExceptionalDual,
    /// `a_j + sum_{e in P} b_e E[X^T_ej] + c E[max_{e in P} X^E_ej] < 0`.
    Violated { request: usize, path: Vec<usize>, value: f64 },
}

/// Cheapest admissible path of `request` under edge prices `b` and exceptional
/// price `c`: minimizes `sum_{e in P} b_e E[X^T_ej] + c E[(X_j / c_min(P))^E]`.
///
/// Guesses the bottleneck capacity; for each guess runs a shortest path on the
/// admissible edges at least that wide and scores the result by its true
/// bottleneck. Returns `None` if the request has no admissible path.
pub fn price_request(view: &RoutingView<'_>, request: usize, b: &[f64], c: f64) -> Option<(f64, Vec<usize>)> {
    let inst = view.instance();
    let req = &inst.requests[request];
    let admissible = view.admissible_edges(request);
    let mut caps: Vec<&Rational> = admissible.iter().map(|&e| &inst.edges[e].capacity).collect();
    caps.sort();
    caps.dedup();
    let t = view.truncated_loads(request);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for cap in caps {
        let allowed = |e: usize| view.is_admissible(request, e) && &inst.edges[e].capacity >= cap;
        let Some((dist, path)) = view
            .graph()
            .shortest_path(req.source, req.sink, allowed, |e| (b[e] * t[e]).max(0.0))
        else {
            continue;
        };
        let total = dist + c * view.path_exceptional(request, &path);
        if best.as_ref().is_none_or(|(v, _)| total < *v) {
            best = Some((total, path));
        }
    }
    best
}

/// Separation oracle for the dual of the path LP at the view's threshold.
pub fn separation_oracle_dp(r: &RoutingInstance, tau: &Rational, point: &DualPoint) -> Separation {
    if let Some(edge) = point.b.iter().position(|&b| b < 0.0) {
        return Separation::NegativeEdgeDual { edge };
    }
    if point.c < 0.0 {
        return Separation::NegativeExceptionalDual;
    }
    let view = RoutingView::new(r, tau);
    for j in 0..view.requests() {
        if let Some((cost, path)) = price_request(&view, j, &point.b, point.c) {
            let value = point.a[j] + cost;
            if value < 0.0 {
                return Separation::Violated {
                    request: j,
                    path,
                    value,
                };
            }
        }
    }
    Separation::Feasible
}

/// Verdict of the path LP together with a witness when feasible.
#[derive(Clone, Debug, Serialize)]
pub struct PathLp {
    pub feasible: bool,
    /// Minimum total violation of the path LP rows (zero iff feasible).
    pub violation: f64,
    pub solution: Option<FractionalSolution<Vec<usize>>>,
    pub columns: usize,
    pub rounds: usize,
}

impl PathLp {
    fn infeasible(violation: f64) -> Self {
        Self {
            feasible: false,
            violation,
            solution: None,
            columns: 0,
            rounds: 0,
        }
    }
}

struct Master {
    lp: LinearProgram,
    cols: Vec<(usize, usize)>,
    assign_rows: Vec<usize>,
    edge_rows: Vec<usize>,
    exc_row: usize,
}

/// Builds the path LP over explicit columns. With `elastic`, every row gets a
/// nonnegative violation variable and the objective minimizes their sum.
fn build_master(view: &RoutingView<'_>, columns: &[Vec<Vec<usize>>], elastic: bool) -> Master {
    let inst = view.instance();
    let tau = view.tau().to_f64();
    let mut lp = LinearProgram::new();
    let mut cols = Vec::new();
    let mut assign: Vec<Vec<(usize, f64)>> = vec![Vec::new(); columns.len()];
    let mut edge: Vec<Vec<(usize, f64)>> = vec![Vec::new(); inst.edges.len()];
    let mut exc = Vec::new();
    for (j, paths) in columns.iter().enumerate() {
        for (p, path) in paths.iter().enumerate() {
            let k = lp.add_variable(format!("y_{j}_{p}"));
            cols.push((j, p));
            assign[j].push((k, 1.0));
            for &e in path {
                let t = view.truncated_load(j, e);
                if t != 0.0 {
                    edge[e].push((k, t));
                }
            }
            let x = view.path_exceptional(j, path);
            if x != 0.0 {
                exc.push((k, x));
            }
        }
    }
    let mut objective = Vec::new();
    let mut slack = |lp: &mut LinearProgram, name: String, sign: f64, row: &mut Vec<(usize, f64)>| {
        if elastic {
            let k = lp.add_variable(name);
            row.push((k, sign));
            objective.push((k, 1.0));
        }
    };
    let mut assign_rows = Vec::new();
    for (j, mut row) in assign.into_iter().enumerate() {
        slack(&mut lp, format!("u_{j}"), 1.0, &mut row);
        assign_rows.push(lp.add_constraint(format!("assign_{j}"), row, Sense::Eq, 1.0));
    }
    let mut edge_rows = Vec::new();
    for (e, mut row) in edge.into_iter().enumerate() {
        slack(&mut lp, format!("v_{e}"), -1.0, &mut row);
        edge_rows.push(lp.add_constraint(format!("edge_{e}"), row, Sense::Le, tau));
    }
    slack(&mut lp, "w".into(), -1.0, &mut exc);
    let exc_row = lp.add_constraint("exceptional", exc, Sense::Le, tau);
    if elastic {
        lp.set_objective(objective);
    }
    Master {
        lp,
        cols,
        assign_rows,
        edge_rows,
        exc_row,
    }
}

fn extract(master: &Master, x: &[f64], columns: &[Vec<Vec<usize>>]) -> FractionalSolution<Vec<usize>> {
    let mut weights = vec![Vec::new(); columns.len()];
    for (k, &(j, p)) in master.cols.iter().enumerate() {
        if x[k] > 0.0 {
            weights[j].push((columns[j][p].clone(), x[k]));
        }
    }
    FractionalSolution { weights }
}

/// Path LP by column generation.
///
/// The restricted master minimizes total row violation over the current
/// columns; pricing uses its duals (`b_e = -beta_e`, `c = -gamma`, both
/// clamped at zero) and adds, per request, the cheapest path whenever its
/// reduced cost is negative. At convergence the master value is the optimal
/// violation of the full LP, so the LP is feasible iff it is at most `1e-9`.
pub fn solve_lpp_column_generation(r: &RoutingInstance, tau: &Rational) -> Result<PathLp> {
    let view = RoutingView::new(r, tau);
    let n = view.requests();
    let unit = vec![1.0; r.edges.len()];
    let mut columns: Vec<Vec<Vec<usize>>> = Vec::with_capacity(n);
    for j in 0..n {
        match price_request(&view, j, &unit, 0.0) {
            Some((_, path)) => columns.push(vec![path]),
            None => return Ok(PathLp::infeasible(1.0)),
        }
    }
    let solver = DenseSimplex::default();
    let mut rounds = 0;
    loop {
        rounds += 1;
        if rounds > 10_000 {
            return Err(Error::NumericalFailure("column generation did not converge".into()));
        }
        let master = build_master(&view, &columns, true);
        let sol = solver.solve(&master.lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::NumericalFailure(format!("restricted master ended {:?}", sol.status)));
        }
        let b: Vec<f64> = master.edge_rows.iter().map(|&row| (-sol.duals[row]).max(0.0)).collect();
        let c = (-sol.duals[master.exc_row]).max(0.0);
        let alpha: Vec<f64> = master.assign_rows.iter().map(|&row| sol.duals[row]).collect();
        let priced: Vec<Option<Vec<usize>>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let (cost, path) = price_request(&view, j, &b, c)?;
                (cost < alpha[j] - FEAS_TOL && !columns[j].contains(&path)).then_some(path)
            })
            .collect();
        let mut added = false;
        for (j, p) in priced.into_iter().enumerate() {
            if let Some(path) = p {
                columns[j].push(path);
                added = true;
            }
        }
        if !added {
            let violation = sol.objective.max(0.0);
            let total_cols = columns.iter().map(Vec::len).sum();
            if violation > FEAS_TOL {
                return Ok(PathLp {
                    feasible: false,
                    violation,
                    solution: None,
                    columns: total_cols,
                    rounds,
                });
            }
            // clean witness from a plain feasibility solve over the final columns
            let plain = build_master(&view, &columns, false);
            let x = match solve_feasibility(&plain.lp)? {
                Feasibility::Feasible(x) => x,
                Feasibility::Infeasible { violation } => {
                    return Err(Error::NumericalFailure(format!(
                        "master reported violation {} but restricted LP is infeasible by {violation}",
                        sol.objective
                    )))
                }
            };
            return Ok(PathLp {
                feasible: true,
                violation,
                solution: Some(extract(&plain, &x, &columns)),
                columns: total_cols,
                rounds,
            });
        }
    }
}

/// Reference: the path LP over every admissible simple path. Exponential;
/// small graphs only.
pub fn solve_lpp_enumerated(r: &RoutingInstance, tau: &Rational) -> Result<PathLp> {
    let view = RoutingView::new(r, tau);
    let columns: Vec<Vec<Vec<usize>>> = (0..view.requests()).map(|j| view.paths(j)).collect();
    if columns.iter().any(Vec::is_empty) {
        return Ok(PathLp::infeasible(1.0));
    }
    let master = build_master(&view, &columns, false);
    let total_cols = master.cols.len();
    Ok(match solve_feasibility(&master.lp)? {
        Feasibility::Feasible(x) => PathLp {
            feasible: true,
            violation: 0.0,
            solution: Some(extract(&master, &x, &columns)),
            columns: total_cols,
            rounds: 1,
        },
        Feasibility::Infeasible { violation } => PathLp {
            feasible: false,
            violation,
            solution: None,
            columns: total_cols,
            rounds: 1,
        },
    })
}

/// Largest scaled violation of the path LP rows by a fractional solution,
/// including admissibility of every path used.
pub fn lpp_max_violation(view: &RoutingView<'_>, sol: &FractionalSolution<Vec<usize>>) -> f64 {
    let inst = view.instance();
    let tau = view.tau().to_f64();
    let mut edge = vec![0.0; inst.edges.len()];
    let mut exc = 0.0;
    let mut worst = sol.assignment_error();
    for (j, ws) in sol.weights.iter().enumerate() {
        for (path, y) in ws {
            if path.iter().any(|&e| !view.is_admissible(j, e)) {
                return f64::INFINITY;
            }
            worst = worst.max(-y);
            for &e in path {
                edge[e] += view.truncated_load(j, e) * y;
            }
            exc += view.path_exceptional(j, path) * y;
        }
    }
    for load in edge.into_iter().chain([exc]) {
        worst = worst.max((load - tau) / tau.max(1.0));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Edge, RoutingRequest};
    use crate::stoch::{rat, ExactDist};

    fn triangle() -> RoutingInstance {
        RoutingInstance::new(
            3,
            vec![
                Edge { tail: 0, head: 1, capacity: rat(1, 1) },
                Edge { tail: 1, head: 2, capacity: rat(1, 1) },
                Edge { tail: 0, head: 2, capacity: rat(1, 2) },
            ],
            vec![RoutingRequest { source: 0, sink: 2, demand: ExactDist::point(rat(1, 1)) }],
        )
        .unwrap()
    }

    #[test]
    fn zero_point_is_feasible() {
        let r = triangle();
        let p = DualPoint { a: vec![0.0], b: vec![0.0; 3], c: 0.0 };
        assert_eq!(separation_oracle_dp(&r, &rat(3, 1), &p), Separation::Feasible);
    }

    #[test]
    fn negative_prices_are_reported() {
        let r = triangle();
        let p = DualPoint { a: vec![0.0], b: vec![0.0, -1.0, 0.0], c: 0.0 };
        assert_eq!(separation_oracle_dp(&r, &rat(3, 1), &p), Separation::NegativeEdgeDual { edge: 1 });
        let p = DualPoint { a: vec![0.0], b: vec![0.0; 3], c: -0.5 };
        assert_eq!(separation_oracle_dp(&r, &rat(3, 1), &p), Separation::NegativeExceptionalDual);
    }

    #[test]
    fn negative_request_dual_is_violated() {
        let r = triangle();
        let p = DualPoint { a: vec![-1.0], b: vec![0.0; 3], c: 0.0 };
        match separation_oracle_dp(&r, &rat(3, 1), &p) {
            Separation::Violated { request: 0, value, .. } => assert_eq!(value, -1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pricing_prefers_cheaper_truncated_cost() {
        let r = triangle();
        let view = RoutingView::new(&r, &rat(3, 1));
        // price the thin edge heavily: the two-hop path wins
        let (cost, path) = price_request(&view, 0, &[0.1, 0.1, 1.0], 0.0).unwrap();
        assert_eq!(path, vec![0, 1]);
        assert!((cost - 0.2).abs() < 1e-12);
    }

    #[test]
    fn column_generation_on_triangle() {
        let r = triangle();
        let cg = solve_lpp_column_generation(&r, &rat(3, 1)).unwrap();
        assert!(cg.feasible);
        let view = RoutingView::new(&r, &rat(3, 1));
        assert!(lpp_max_violation(&view, cg.solution.as_ref().unwrap()) <= 1e-9);
        let full = solve_lpp_enumerated(&r, &rat(3, 1)).unwrap();
        assert!(full.feasible);
        assert_eq!(full.columns, 2);
        // below 1 no path fits: the two-hop path puts load 1 on each edge
        assert!(!solve_lpp_column_generation(&r, &rat(9, 10)).unwrap().feasible);
    }

    #[test]
    fn single_path_graph_needs_no_pricing() {
        let r = RoutingInstance::new(
            3,
            vec![Edge { tail: 0, head: 1, capacity: rat(1, 1) }, Edge { tail: 1, head: 2, capacity: rat(2, 1) }],
            vec![RoutingRequest { source: 0, sink: 2, demand: ExactDist::point(rat(1, 1)) }],
        )
        .unwrap();
        let cg = solve_lpp_column_generation(&r, &rat(2, 1)).unwrap();
        assert!(cg.feasible);
        assert_eq!((cg.columns, cg.rounds), (1, 1));
    }
}
