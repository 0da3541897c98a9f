use num_traits::{Signed, Zero};
use serde::Serialize;

use super::{solve_feasibility, Feasibility, LinearProgram, Sense};
use crate::error::{Error, Result};
use crate::instance::ConfigInstance;
use crate::stoch::{Rational, Scalar};

/// Per-request weights over configurations (`C = usize`) or paths
/// (`C = Vec<usize>` of edge ids). Zero weights are not stored.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FractionalSolution<C> {
    pub weights: Vec<Vec<(C, f64)>>,
}

impl<C> FractionalSolution<C> {
    /// Largest deviation of a request's total weight from one.
    pub fn assignment_error(&self) -> f64 {
        self.weights
            .iter()
            .map(|w| (w.iter().map(|(_, y)| y).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// The configuration LP at a fixed threshold. Only unpruned configurations
/// get a variable, so pruned ones carry weight exactly zero.
#[derive(Clone, Debug)]
pub struct LpcModel {
    pub lp: LinearProgram,
    pub tau: Rational,
    /// `(request, configuration)` of each variable.
    pub vars: Vec<(usize, usize)>,
}

impl LpcModel {
    pub fn solution(&self, x: &[f64], requests: usize) -> FractionalSolution<usize> {
        let mut weights = vec![Vec::new(); requests];
        for (k, &(j, c)) in self.vars.iter().enumerate() {
            if x[k] > 0.0 {
                weights[j].push((c, x[k]));
            }
        }
        FractionalSolution { weights }
    }
}

pub fn build_lpc(inst: &ConfigInstance, tau: &Rational) -> LpcModel {
    let mut lp = LinearProgram::new();
    let mut vars = Vec::new();
    let mut assign: Vec<Vec<(usize, f64)>> = vec![Vec::new(); inst.requests.len()];
    let mut trunc: Vec<Vec<(usize, f64)>> = vec![Vec::new(); inst.m];
    let mut exc = Vec::new();
    for (j, req) in inst.requests.iter().enumerate() {
        for (c, cfg) in req.configs.iter().enumerate() {
            if &cfg.expected_max() > tau {
                continue;
            }
            let k = lp.add_variable(format!("y_{j}_{c}"));
            vars.push((j, c));
            assign[j].push((k, 1.0));
            for (i, row) in trunc.iter_mut().enumerate() {
                let t = cfg.truncated_load(i, tau);
                if !t.is_zero() {
                    row.push((k, t.to_f64()));
                }
            }
            let e = cfg.exceptional_max(tau);
            if !e.is_zero() {
                exc.push((k, e.to_f64()));
            }
        }
    }
    let tau_f = tau.to_f64();
    for (j, row) in assign.into_iter().enumerate() {
        lp.add_constraint(format!("assign_{j}"), row, Sense::Eq, 1.0);
    }
    for (i, row) in trunc.into_iter().enumerate() {
        lp.add_constraint(format!("trunc_{i}"), row, Sense::Le, tau_f);
    }
    lp.add_constraint("exceptional", exc, Sense::Le, tau_f);
    LpcModel {
        lp,
        tau: tau.clone(),
        vars,
    }
}

/// Solves LP_C at `tau`; `None` when infeasible.
pub fn solve_lpc(inst: &ConfigInstance, tau: &Rational) -> Result<Option<FractionalSolution<usize>>> {
    let model = build_lpc(inst, tau);
    Ok(match solve_feasibility(&model.lp)? {
        Feasibility::Feasible(x) => Some(model.solution(&x, inst.requests.len())),
        Feasibility::Infeasible { .. } => None,
    })
}

/// Outcome of a threshold search.
#[derive(Clone, Debug)]
pub struct TauSearch<S> {
    /// Smallest feasible threshold found.
    pub tau: Rational,
    /// Largest threshold proven infeasible (zero if none was tried). Any
    /// instance with an infeasible LP at `t` has `E[OPT] > t/2`.
    pub infeasible_below: Rational,
    pub solution: S,
    pub steps: usize,
}

/// `sum_j min_c E[max_i X_ij(c)]`: routing every request through its cheapest
/// configuration satisfies every LP_C row at this threshold.
pub fn lpc_upper_bracket(inst: &ConfigInstance) -> Rational {
    inst.requests
        .iter()
        .map(|r| r.configs.iter().map(|c| c.expected_max()).min().unwrap_or_else(Rational::zero))
        .fold(Rational::zero(), |a, b| a + b)
}

/// Exact bisection on `[lo, hi]` until `hi - lo <= eps * hi`. `feasible`
/// returns `Some(solution)` at feasible thresholds. A nonpositive `hi` means
/// every positive threshold works; the search then reports `tau = 1`.
pub fn bisect_tau<S>(
    lo: Rational,
    hi: Rational,
    eps: f64,
    mut feasible: impl FnMut(&Rational) -> Result<Option<S>>,
) -> Result<TauSearch<S>> {
    let mut hi = hi;
    if !hi.is_positive() {
        hi = Rational::from_integer(1.into());
        let solution = feasible(&hi)?.ok_or(Error::NoFeasibleTau { hi: 1.0 })?;
        return Ok(TauSearch {
            tau: hi,
            infeasible_below: Rational::zero(),
            solution,
            steps: 1,
        });
    }
    let mut best = feasible(&hi)?.ok_or(Error::NoFeasibleTau { hi: hi.to_f64() })?;
    let mut lo = if lo.is_negative() { Rational::zero() } else { lo };
    let mut steps = 1;
    let eps = crate::stoch::rational_from_f64(eps);
    let two = Rational::from_integer(2.into());
    while hi.clone() - lo.clone() > eps.clone() * hi.clone() {
        let mid = (lo.clone() + hi.clone()) / two.clone();
        steps += 1;
        match feasible(&mid)? {
            Some(s) => {
                hi = mid;
                best = s;
            }
            None => lo = mid,
        }
    }
    Ok(TauSearch {
        tau: hi,
        infeasible_below: lo,
        solution: best,
        steps,
    })
}

/// Smallest `tau` (to relative precision `eps`) with LP_C feasible.
pub fn min_feasible_tau(
    inst: &ConfigInstance,
    lo: Rational,
    hi: Rational,
    eps: f64,
) -> Result<TauSearch<FractionalSolution<usize>>> {
    bisect_tau(lo, hi, eps, |t| solve_lpc(inst, t))
}

/// Recomputes LP_C row activities of a fractional solution; used by checks.
pub fn lpc_rows(inst: &ConfigInstance, tau: &Rational, sol: &FractionalSolution<usize>) -> (Vec<f64>, f64) {
    let mut trunc = vec![0.0; inst.m];
    let mut exc = 0.0;
    for (j, ws) in sol.weights.iter().enumerate() {
        for &(c, y) in ws {
            let cfg = &inst.requests[j].configs[c];
            for (i, t) in trunc.iter_mut().enumerate() {
                *t += cfg.truncated_load(i, tau).to_f64() * y;
            }
            exc += cfg.exceptional_max(tau).to_f64() * y;
        }
    }
    (trunc, exc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Configuration, Request};
    use crate::stoch::{rat, ExactDist};

    fn single(law: ExactDist, mult: Vec<Rational>) -> ConfigInstance {
        let m = mult.len();
        ConfigInstance::new(
            m,
            vec![Request {
                id: 0,
                configs: vec![Configuration::new(mult, law)],
            }],
        )
        .unwrap()
    }

    fn two_point() -> ExactDist {
        ExactDist::new([(rat(1, 1), rat(1, 2)), (rat(2, 1), rat(1, 2))]).unwrap()
    }

    #[test]
    fn single_variable_rows() {
        let inst = single(two_point(), vec![rat(1, 1)]);
        let model = build_lpc(&inst, &rat(2, 1));
        assert_eq!(model.vars, vec![(0, 0)]);
        let trunc = &model.lp.constraints[1];
        assert_eq!(trunc.coeffs, vec![(0, 0.5)]);
        let exc = &model.lp.constraints[2];
        assert_eq!(exc.coeffs, vec![(0, 1.0)]);
        let sol = solve_lpc(&inst, &rat(2, 1)).unwrap().unwrap();
        assert_eq!(sol.weights, vec![vec![(0, 1.0)]]);
    }

    #[test]
    fn pruned_configuration_makes_lp_infeasible() {
        let inst = single(two_point(), vec![rat(1, 1)]);
        let model = build_lpc(&inst, &rat(7, 5));
        assert!(model.vars.is_empty());
        assert!(solve_lpc(&inst, &rat(7, 5)).unwrap().is_none());
    }

    #[test]
    fn deterministic_loads_leave_exceptional_row_empty() {
        let inst = single(ExactDist::point(rat(1, 2)), vec![rat(1, 1), rat(1, 2)]);
        let model = build_lpc(&inst, &rat(1, 1));
        assert!(model.lp.constraints.last().unwrap().coeffs.is_empty());
        assert!(solve_lpc(&inst, &rat(1, 1)).unwrap().is_some());
    }

    #[test]
    fn bisection_finds_single_request_threshold() {
        let inst = single(two_point(), vec![rat(1, 1)]);
        let hi = lpc_upper_bracket(&inst);
        assert_eq!(hi, rat(3, 2));
        let s = min_feasible_tau(&inst, Rational::zero(), rat(4, 1), 1e-3).unwrap();
        let t = s.tau.to_f64();
        assert!((t - 1.5).abs() <= 1.5e-3, "{t}");
        assert!(s.infeasible_below < rat(3, 2));
    }

    #[test]
    fn bisection_matches_closed_form_for_deterministic_request() {
        // one config, multipliers (3, 1, 1) on a point mass 1 -> max entry 3
        let inst = single(ExactDist::point(rat(1, 1)), vec![rat(3, 1), rat(1, 1), rat(1, 1)]);
        let s = min_feasible_tau(&inst, Rational::zero(), rat(10, 1), 1e-3).unwrap();
        assert!((s.tau.to_f64() - 3.0).abs() <= 3e-3);
    }

    #[test]
    fn degenerate_bracket_returns_hi() {
        let inst = single(two_point(), vec![rat(1, 1)]);
        let s = min_feasible_tau(&inst, rat(2, 1), rat(2, 1), 1e-3).unwrap();
        assert_eq!(s.tau, rat(2, 1));
        assert!(matches!(
            min_feasible_tau(&inst, Rational::zero(), rat(1, 1), 1e-3),
            Err(Error::NoFeasibleTau { .. })
        ));
    }
}
