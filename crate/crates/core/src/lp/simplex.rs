use super::{LinearProgram, LpSolution, LpSolver, LpStatus, Sense, FEAS_TOL};
use crate::error::{Error, Result};

/// Dense two-phase tableau simplex with Bland's rule. The final basis is
/// re-solved from the original data to clean up accumulated pivot error, and
/// row duals come from `B' y = c_B`.
#[derive(Clone, Debug)]
pub struct DenseSimplex {
    pub pivot_tol: f64,
    pub cost_tol: f64,
    pub max_pivots: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-11,
            cost_tol: 1e-11,
            max_pivots: 200_000,
        }
    }
}

struct Standard {
    /// rows x columns, original variables first, then slack/surplus, then
    /// artificials
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    flip: Vec<f64>,
    ident: Vec<usize>,
    n_orig: usize,
    first_artificial: usize,
    cols: usize,
}

fn standardize(lp: &LinearProgram) -> Standard {
    let m = lp.constraints.len();
    let n = lp.num_variables();
    let mut slack_of = vec![None; m];
    let mut art_of = vec![None; m];
    let mut flip = vec![1.0; m];
    let mut senses = Vec::with_capacity(m);
    let mut next = n;
    for (i, row) in lp.constraints.iter().enumerate() {
        let mut sense = row.sense;
        if row.rhs < 0.0 {
            flip[i] = -1.0;
            sense = match sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
        if sense != Sense::Eq {
            slack_of[i] = Some(next);
            next += 1;
        }
        senses.push(sense);
    }
    let first_artificial = next;
    for (i, s) in senses.iter().enumerate() {
        if *s != Sense::Le {
            art_of[i] = Some(next);
            next += 1;
        }
    }
    let cols = next;
    let mut a = vec![vec![0.0; cols]; m];
    let mut b = vec![0.0; m];
    let mut ident = vec![0; m];
    for (i, row) in lp.constraints.iter().enumerate() {
        for &(k, v) in &row.coeffs {
            a[i][k] += flip[i] * v;
        }
        b[i] = flip[i] * row.rhs;
        if let Some(s) = slack_of[i] {
            a[i][s] = if senses[i] == Sense::Le { 1.0 } else { -1.0 };
        }
        if let Some(r) = art_of[i] {
            a[i][r] = 1.0;
            ident[i] = r;
        } else {
            ident[i] = slack_of[i].expect("<= row has a slack");
        }
    }
    Standard {
        a,
        b,
        flip,
        ident,
        n_orig: n,
        first_artificial,
        cols,
    }
}

struct Tableau {
    t: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    reduced: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn price(&mut self, cost: &[f64]) {
        let mut d = cost.to_vec();
        for (i, &bi) in self.basis.iter().enumerate() {
            let cb = cost[bi];
            if cb != 0.0 {
                for (dj, tij) in d.iter_mut().zip(&self.t[i]) {
                    *dj -= cb * tij;
                }
            }
        }
        self.reduced = d;
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let p = self.t[r][q];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        self.t[r][q] = 1.0;
        let pivot_row = self.t[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.t.len() {
            if i == r {
                continue;
            }
            let f = self.t[i][q];
            if f != 0.0 {
                for (v, pr) in self.t[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                self.t[i][q] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
                if self.rhs[i] < 0.0 && self.rhs[i] > -1e-13 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let f = self.reduced[q];
        if f != 0.0 {
            for (v, pr) in self.reduced.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            self.reduced[q] = 0.0;
        }
        self.basis[r] = q;
        self.pivots += 1;
    }
}

impl DenseSimplex {
    /// Runs simplex iterations until optimal; returns false when unbounded.
    fn optimize(&self, tab: &mut Tableau, enterable: usize) -> Result<bool> {
        loop {
            if tab.pivots > self.max_pivots {
                return Err(Error::NumericalFailure(format!(
                    "simplex exceeded {} pivots",
                    self.max_pivots
                )));
            }
            // Bland: lowest-index improving column
            let Some(q) = (0..enterable).find(|&j| tab.reduced[j] < -self.cost_tol) else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..tab.t.len() {
                let a = tab.t[i][q];
                if a > self.pivot_tol {
                    let ratio = tab.rhs[i] / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-15 || (ratio <= br + 1e-15 && tab.basis[i] < tab.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((r, _)) => tab.pivot(r, q),
                None => return Ok(false),
            }
        }
    }
}

/// Solves the square system `m x = rhs` by Gaussian elimination with partial
/// pivoting. `None` if numerically singular.
fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-13 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                for c in col..n {
                    m[r][c] -= f * m[col][c];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    Some(x)
}

impl LpSolver for DenseSimplex {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution> {
        lp.validate()?;
        let std = standardize(lp);
        let m = std.b.len();
        let mut tab = Tableau {
            t: std.a.clone(),
            rhs: std.b.clone(),
            basis: std.ident.clone(),
            reduced: Vec::new(),
            pivots: 0,
        };

        let mut phase_one_cost = vec![0.0; std.cols];
        for c in phase_one_cost.iter_mut().skip(std.first_artificial) {
            *c = 1.0;
        }
        tab.price(&phase_one_cost);
        self.optimize(&mut tab, std.cols)?;
        let artificial: f64 = tab
            .basis
            .iter()
            .zip(&tab.rhs)
            .filter(|(b, _)| **b >= std.first_artificial)
            .map(|(_, v)| v.max(0.0))
            .sum();
        if artificial > FEAS_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; std.n_orig],
                objective: f64::NAN,
                duals: vec![0.0; m],
                phase_one: artificial,
            });
        }

        // drive zero-valued artificials out of the basis where possible
        for r in 0..m {
            if tab.basis[r] >= std.first_artificial {
                if let Some(q) = (0..std.first_artificial).find(|&j| tab.t[r][j].abs() > 1e-9) {
                    tab.pivot(r, q);
                }
            }
        }

        let mut cost = vec![0.0; std.cols];
        if let Some(obj) = &lp.objective {
            for &(k, a) in obj {
                cost[k] += a;
            }
            tab.price(&cost);
            if !self.optimize(&mut tab, std.first_artificial)? {
                return Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    x: vec![0.0; std.n_orig],
                    objective: f64::NEG_INFINITY,
                    duals: vec![0.0; m],
                    phase_one: artificial,
                });
            }
        } else {
            cost = phase_one_cost;
        }

        // refine the basic solution and the duals from the original columns
        let bmat: Vec<Vec<f64>> = (0..m)
            .map(|i| tab.basis.iter().map(|&bj| std.a[i][bj]).collect())
            .collect();
        let x_b = solve_dense(bmat.clone(), std.b.clone()).unwrap_or_else(|| tab.rhs.clone());
        let mut x_full = vec![0.0; std.cols];
        for (i, &bj) in tab.basis.iter().enumerate() {
            x_full[bj] = if x_b[i].abs() < 1e-14 { 0.0 } else { x_b[i] };
        }
        let bt: Vec<Vec<f64>> = (0..m).map(|r| (0..m).map(|c| bmat[c][r]).collect()).collect();
        let c_b: Vec<f64> = tab.basis.iter().map(|&bj| cost[bj]).collect();
        let y = solve_dense(bt, c_b).unwrap_or_else(|| std.ident.iter().map(|&k| cost[k] - tab.reduced[k]).collect());
        let duals = y.iter().zip(&std.flip).map(|(v, f)| v * f).collect();

        let x: Vec<f64> = x_full[..std.n_orig].iter().map(|v| v.max(0.0)).collect();
        let objective = lp.objective_value(&x);
        Ok(LpSolution {
            status: LpStatus::Optimal,
            x,
            objective,
            duals,
            phase_one: artificial,
        })
    }
}
