use std::ops::{Deref, DerefMut};

use num_traits::Zero;
use serde::Serialize;

use crate::instance::Request;
use crate::stoch::{Rational, Scalar};

pub const BASE: f64 = 1.5;

/// Expected loads `L_0..L_m`; entry 0 is the virtual resource collecting
/// expected exceptional parts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoadVector(pub Vec<f64>);

impl LoadVector {
    pub fn zeros(resources: usize) -> Self {
        Self(vec![0.0; resources + 1])
    }

    pub fn add(&mut self, proxy: &[(usize, f64)]) {
        for &(i, x) in proxy {
            self.0[i] += x;
        }
    }
}

impl Deref for LoadVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for LoadVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// `sum_i 1.5^(L_i / tau)`.
pub fn potential(load: &[f64], tau: f64) -> f64 {
    load.iter().map(|l| BASE.powf(l / tau)).sum()
}

/// `log_{3/2}(2m + 2)`.
pub fn ell(m: usize) -> f64 {
    ((2 * m + 2) as f64).ln() / BASE.ln()
}

/// `phi(L + x) - phi(L)` for a sparse proxy `x`.
pub fn delta_phi(load: &[f64], proxy: &[(usize, f64)], tau: f64) -> f64 {
    proxy
        .iter()
        .filter(|(_, x)| *x != 0.0)
        .map(|&(i, x)| BASE.powf((load[i] + x) / tau) - BASE.powf(load[i] / tau))
        .sum()
}

/// Load vector with the current guess `lambda`, threshold `tau = 2 lambda`
/// and cap `ell * tau`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialState {
    pub load: LoadVector,
    pub lambda: Rational,
    pub tau: Rational,
    pub tau_f64: f64,
    pub ell: f64,
}

impl PotentialState {
    /// State over `m` real resources plus the virtual one.
    pub fn new(m: usize, lambda: Rational) -> Self {
        let tau = lambda.clone() * Rational::from_integer(2.into());
        Self {
            load: LoadVector::zeros(m),
            tau_f64: tau.to_f64(),
            lambda,
            tau,
            ell: ell(m),
        }
    }

    pub fn resources(&self) -> usize {
        self.load.len() - 1
    }

    pub fn potential(&self) -> f64 {
        potential(&self.load, self.tau_f64)
    }

    pub fn delta(&self, proxy: &[(usize, f64)]) -> f64 {
        delta_phi(&self.load, proxy, self.tau_f64)
    }

    /// Whether `L + x` stays within `ell * tau` on every touched entry.
    pub fn admits(&self, proxy: &[(usize, f64)]) -> bool {
        let cap = self.ell * self.tau_f64;
        proxy
            .iter()
            .all(|&(i, x)| self.load[i] + x <= cap * (1.0 + 1e-12))
    }

    pub fn reset(&mut self, lambda: Rational) {
        *self = Self::new(self.resources(), lambda);
    }
}

/// Deterministic proxy `x(c)`: `x_0 = E[max_i X^E_i(c)]`, `x_i = E[X^T_i(c)]`,
/// stored sparsely over indices `0..=m` (resource `i` at index `i + 1`).
pub fn config_proxy(request: &Request, config: usize, tau: &Rational) -> Vec<(usize, f64)> {
    let cfg = &request.configs[config];
    let mut out = Vec::new();
    let e = cfg.exceptional_max(tau);
    if !e.is_zero() {
        out.push((0, e.to_f64()));
    }
    for i in 0..cfg.multipliers.len() {
        let t = cfg.truncated_load(i, tau);
        if !t.is_zero() {
            out.push((i + 1, t.to_f64()));
        }
    }
    out
}

/// Result of one greedy step.
#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Commit { index: usize, delta: f64, proxy: Vec<(usize, f64)> },
    /// The argmin breaches `ell * tau`; certifies `E[OPT] > lambda`.
    Fail { index: usize, delta: f64 },
}

/// Picks the proxy with the smallest potential increase (lowest index on
/// ties). Commits it to `state` if it respects the cap.
pub fn online_step(state: &mut PotentialState, proxies: &[Vec<(usize, f64)>]) -> StepOutcome {
    assert!(!proxies.is_empty(), "request without configurations");
    let mut best = (0, state.delta(&proxies[0]));
    for (c, p) in proxies.iter().enumerate().skip(1) {
        let d = state.delta(p);
        if d < best.1 {
            best = (c, d);
        }
    }
    let (index, delta) = best;
    if !state.admits(&proxies[index]) {
        return StepOutcome::Fail { index, delta };
    }
    state.load.add(&proxies[index]);
    StepOutcome::Commit {
        index,
        delta,
        proxy: proxies[index].clone(),
    }
}
