//! Linear programs: a small modelling layer, a dense simplex backend, the
//! configuration LP with its threshold search, and the routing path LP solved
//! by column generation.

mod lpc;
mod paths;
mod simplex;

pub use lpc::{
    bisect_tau, build_lpc, lpc_rows, lpc_upper_bracket, min_feasible_tau, solve_lpc, FractionalSolution,
    LpcModel, TauSearch,
};
pub use paths::{
    lpp_max_violation, price_request, separation_oracle_dp, solve_lpp_column_generation,
    solve_lpp_enumerated, DualPoint, PathLp, Separation,
};
pub use simplex::DenseSimplex;

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Absolute feasibility tolerance used throughout.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(k, a)| a * x[k]).sum()
    }

    /// Amount by which `x` violates this row, scaled by the row magnitude.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.lhs(x);
        let raw = match self.sense {
            Sense::Le => lhs - self.rhs,
            Sense::Ge => self.rhs - lhs,
            Sense::Eq => (lhs - self.rhs).abs(),
        };
        let scale = self
            .coeffs
            .iter()
            .map(|&(k, a)| (a * x[k]).abs())
            .sum::<f64>()
            .max(self.rhs.abs())
            .max(1.0);
        raw.max(0.0) / scale
    }
}

/// `min c'x` subject to linear rows and `x >= 0`. Without an objective the
/// program is a pure feasibility question.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub variables: Vec<String>,
    pub constraints: Vec<Constraint>,
    pub objective: Option<Vec<(usize, f64)>>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, name: impl Into<String>) -> usize {
        self.variables.push(name.into());
        self.variables.len() - 1
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, coeffs: Vec<(usize, f64)>) {
        self.objective = Some(coeffs);
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.variables.len();
        let bad = |c: &[(usize, f64)]| c.iter().any(|&(k, a)| k >= n || !a.is_finite());
        if let Some(row) = self.constraints.iter().find(|r| bad(&r.coeffs) || !r.rhs.is_finite()) {
            return Err(Error::Validation(format!("malformed LP row `{}`", row.name)));
        }
        if self.objective.as_deref().is_some_and(bad) {
            return Err(Error::Validation("malformed LP objective".into()));
        }
        Ok(())
    }

    /// Largest scaled row violation or negative entry of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let neg = x.iter().fold(0.0f64, |acc, &v| acc.max(-v));
        self.constraints
            .iter()
            .map(|r| r.violation(x))
            .fold(neg, f64::max)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective
            .as_ref()
            .map_or(0.0, |c| c.iter().map(|&(k, a)| a * x[k]).sum())
    }

    /// CPLEX LP text form, for cross-checking with external solvers.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let term_list = |coeffs: &[(usize, f64)]| {
            let mut s = String::new();
            for (k, &(v, a)) in coeffs.iter().enumerate() {
                let sign = if a < 0.0 { "- " } else if k > 0 { "+ " } else { "" };
                let _ = write!(s, " {sign}{} {}", a.abs(), self.variables[v]);
            }
            if s.is_empty() {
                s.push_str(" 0 ");
                s.push_str(self.variables.first().map_or("x", String::as_str));
            }
            s
        };
        out.push_str("Minimize\n obj:");
        out.push_str(&term_list(self.objective.as_deref().unwrap_or(&[])));
        out.push_str("\nSubject To\n");
        for row in &self.constraints {
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(out, " {}:{} {op} {}", row.name, term_list(&row.coeffs), row.rhs);
        }
        out.push_str("Bounds\n");
        for v in &self.variables {
            let _ = writeln!(out, " {v} >= 0");
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per constraint row of the input program, with the usual
    /// sign convention for minimization (`<=` rows nonpositive, `>=` rows
    /// nonnegative).
    pub duals: Vec<f64>,
    /// Total artificial infeasibility left after phase one.
    pub phase_one: f64,
}

/// Backend contract. Implementations must be deterministic.
pub trait LpSolver {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution>;
}

#[derive(Clone, Debug, PartialEq)]
pub enum Feasibility {
    Feasible(Vec<f64>),
    Infeasible { violation: f64 },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

/// Phase-one feasibility with the default backend.
pub fn solve_feasibility(lp: &LinearProgram) -> Result<Feasibility> {
    solve_feasibility_with(&DenseSimplex::default(), lp)
}

pub fn solve_feasibility_with(solver: &impl LpSolver, lp: &LinearProgram) -> Result<Feasibility> {
    let mut plain = lp.clone();
    plain.objective = None;
    let sol = solver.solve(&plain)?;
    match sol.status {
        LpStatus::Infeasible => Ok(Feasibility::Infeasible {
            violation: sol.phase_one,
        }),
        LpStatus::Unbounded => Err(Error::NumericalFailure("feasibility problem reported unbounded".into())),
        LpStatus::Optimal => {
            let residual = plain.max_violation(&sol.x);
            if residual > FEAS_TOL {
                return Err(Error::NumericalFailure(format!(
                    "phase one converged but the point violates a row by {residual:e}"
                )));
            }
            Ok(Feasibility::Feasible(sol.x))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_program_is_feasible() {
        let lp = LinearProgram::new();
        assert!(solve_feasibility(&lp).unwrap().is_feasible());
        let mut lp = LinearProgram::new();
        lp.add_variable("y");
        assert!(solve_feasibility(&lp).unwrap().is_feasible());
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut lp = LinearProgram::new();
        let y = lp.add_variable("y");
        lp.add_constraint("one", vec![(y, 1.0)], Sense::Eq, 1.0);
        lp.add_constraint("half", vec![(y, 1.0)], Sense::Le, 0.5);
        match solve_feasibility(&lp).unwrap() {
            Feasibility::Infeasible { violation } => assert!((violation - 0.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lp_dump_names_rows() {
        let mut lp = LinearProgram::new();
        let y = lp.add_variable("y_0_1");
        lp.add_constraint("assign_0", vec![(y, 1.0)], Sense::Eq, 1.0);
        let text = lp.to_lp_format();
        assert!(text.contains("assign_0: 1 y_0_1 = 1"));
        assert!(text.contains("Bounds\n y_0_1 >= 0"));
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let mut lp = LinearProgram::new();
        lp.add_constraint("bad", vec![(3, 1.0)], Sense::Le, 1.0);
        assert!(lp.validate().is_err());
    }
}
