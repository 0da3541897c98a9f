use num_traits::{One, Zero};
use serde::Serialize;

use super::potential::{config_proxy, online_step, PotentialState, StepOutcome};
use crate::error::{Error, Result};
use crate::instance::ConfigInstance;
use crate::stoch::{Rational, Scalar};

/// Doubling stops with an error after this many phases.
pub const MAX_PHASES: usize = 256;

/// Result of offering one request at the current guess.
#[derive(Clone, Debug, PartialEq)]
pub enum Attempt<C> {
    /// The choice was committed into the state.
    Commit { choice: C, proxy: Vec<(usize, f64)>, delta: f64 },
    Fail,
}

/// One committed request of an online run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord<C> {
    pub request: usize,
    pub phase: usize,
    pub lambda: f64,
    pub choice: C,
    /// Sparse proxy over `0..=m`; index 0 is the virtual resource.
    pub proxy: Vec<(usize, f64)>,
    pub delta_phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OnlineRun<C> {
    pub records: Vec<TraceRecord<C>>,
    pub initial_lambda: f64,
    pub final_lambda: f64,
    #[serde(skip)]
    pub final_lambda_exact: Rational,
    /// Number of doublings.
    pub resets: usize,
    /// Proxy loads of the last phase.
    pub final_load: Vec<f64>,
    pub final_potential: f64,
}

impl<C: Clone> OnlineRun<C> {
    /// Chosen configuration per request, in request order.
    pub fn choices(&self) -> Vec<C> {
        let mut recs: Vec<&TraceRecord<C>> = self.records.iter().collect();
        recs.sort_by_key(|r| r.request);
        recs.into_iter().map(|r| r.choice.clone()).collect()
    }
}

/// Runs `step` over requests `0..n` while maintaining the guess `lambda`.
///
/// `cheapest(j)` returns `min_c E[max_i X_ij(c)]` and a choice attaining it.
/// The first request with a positive value fixes `lambda_0`; requests before
/// it cost nothing and are committed to their zero-cost choice. On `Fail`
/// the guess doubles, the load vector is zeroed and the request is offered
/// again.
pub fn guess_and_double<C: Clone>(
    n: usize,
    m: usize,
    mut cheapest: impl FnMut(usize) -> Result<(Rational, C)>,
    mut step: impl FnMut(&mut PotentialState, usize) -> Result<Attempt<C>>,
) -> Result<OnlineRun<C>> {
    let mut records = Vec::with_capacity(n);
    let mut state: Option<PotentialState> = None;
    let mut initial: Option<Rational> = None;
    let mut phase = 0;
    let mut free = 0;
    for j in 0..n {
        let st = match state.as_mut() {
            Some(st) => st,
            None => {
                let (value, choice) = cheapest(j)?;
                if value.is_zero() {
                    records.push(TraceRecord {
                        request: j,
                        phase: 0,
                        lambda: 0.0,
                        choice,
                        proxy: Vec::new(),
                        delta_phi: 0.0,
                    });
                    free += 1;
                    continue;
                }
                initial = Some(value.clone());
                state.insert(PotentialState::new(m, value))
            }
        };
        loop {
            match step(st, j)? {
                Attempt::Commit { choice, proxy, delta } => {
                    records.push(TraceRecord {
                        request: j,
                        phase,
                        lambda: st.lambda.to_f64(),
                        choice,
                        proxy,
                        delta_phi: delta,
                    });
                    break;
                }
                Attempt::Fail => {
                    phase += 1;
                    if phase >= MAX_PHASES {
                        return Err(Error::NumericalFailure(format!(
                            "request {j} still fails after {MAX_PHASES} doublings"
                        )));
                    }
                    let doubled = st.lambda.clone() * Rational::from_integer(2.into());
                    st.reset(doubled);
                }
            }
        }
    }
    let initial = initial.unwrap_or_else(Rational::one);
    for r in records.iter_mut().take(free) {
        r.lambda = initial.to_f64();
    }
    let state = state.unwrap_or_else(|| PotentialState::new(m, initial.clone()));
    Ok(OnlineRun {
        records,
        initial_lambda: initial.to_f64(),
        final_lambda: state.lambda.to_f64(),
        final_potential: state.potential(),
        final_load: state.load.0,
        final_lambda_exact: state.lambda,
        resets: phase,
    })
}

fn cheapest_config(inst: &ConfigInstance, j: usize) -> (Rational, usize) {
    let mut best: Option<(Rational, usize)> = None;
    for (c, cfg) in inst.requests[j].configs.iter().enumerate() {
        let v = cfg.expected_max();
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, c));
        }
    }
    best.expect("request has a configuration")
}

/// One step of the potential-function balancer on request `j`.
pub fn config_attempt(inst: &ConfigInstance, state: &mut PotentialState, j: usize) -> Attempt<usize> {
    let tau = state.tau.clone();
    let proxies: Vec<_> = (0..inst.requests[j].configs.len())
        .map(|c| config_proxy(&inst.requests[j], c, &tau))
        .collect();
    match online_step(state, &proxies) {
        StepOutcome::Commit { index, delta, proxy } => Attempt::Commit {
            choice: index,
            proxy,
            delta,
        },
        StepOutcome::Fail { .. } => Attempt::Fail,
    }
}

/// Online configuration balancing with guess-and-double.
pub fn online_config(inst: &ConfigInstance) -> Result<OnlineRun<usize>> {
    guess_and_double(
        inst.requests.len(),
        inst.m,
        |j| Ok(cheapest_config(inst, j)),
        |st, j| Ok(config_attempt(inst, st, j)),
    )
}

/// A single phase at a fixed guess, without doubling.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedLambdaRun {
    /// First request that failed, if any.
    pub failed_at: Option<usize>,
    pub choices: Vec<usize>,
    pub state: PotentialState,
}

pub fn online_config_fixed(inst: &ConfigInstance, lambda: Rational) -> FixedLambdaRun {
    let mut state = PotentialState::new(inst.m, lambda);
    let mut choices = Vec::with_capacity(inst.requests.len());
    for j in 0..inst.requests.len() {
        match config_attempt(inst, &mut state, j) {
            Attempt::Commit { choice, .. } => choices.push(choice),
            Attempt::Fail => {
                return FixedLambdaRun {
                    failed_at: Some(j),
                    choices,
                    state,
                }
            }
        }
    }
    FixedLambdaRun {
        failed_at: None,
        choices,
        state,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Configuration, Request};
    use crate::stoch::{rat, ExactDist};

    fn det(m: usize, i: usize, v: i64) -> Configuration {
        Configuration::indicator(m, i, ExactDist::point(rat(v, 1)))
    }

    fn inst(m: usize, reqs: Vec<Vec<Configuration>>) -> ConfigInstance {
        let requests = reqs
            .into_iter()
            .enumerate()
            .map(|(id, configs)| Request { id, configs })
            .collect();
        ConfigInstance::new(m, requests).unwrap()
    }

    #[test]
    fn never_failing_stream_keeps_initial_guess() {
        let i = inst(2, vec![vec![det(2, 0, 1), det(2, 1, 1)], vec![det(2, 0, 1), det(2, 1, 1)]]);
        let run = online_config(&i).unwrap();
        assert_eq!(run.resets, 0);
        assert_eq!(run.choices(), vec![0, 1]);
        let fixed = online_config_fixed(&i, rat(1, 1));
        assert_eq!(fixed.failed_at, None);
        assert_eq!(fixed.choices, run.choices());
    }

    #[test]
    fn one_failure_doubles_once() {
        // lambda_0 = 1/2, tau = 1, cap ~ 3.419 on the virtual resource; each
        // unit job sits on the boundary and is exceptional, so the fourth one
        // breaches the cap. After doubling, tau = 2 and it is truncated.
        let half = Configuration::indicator(1, 0, ExactDist::point(rat(1, 2)));
        let mut reqs = vec![vec![half]];
        reqs.extend((0..4).map(|_| vec![det(1, 0, 1)]));
        let run = online_config(&inst(1, reqs)).unwrap();
        assert_eq!(run.initial_lambda, 0.5);
        assert_eq!(run.resets, 1);
        assert_eq!(run.final_lambda, 1.0);
        let phases: Vec<usize> = run.records.iter().map(|r| r.phase).collect();
        assert_eq!(phases, vec![0, 0, 0, 0, 1]);
        assert_eq!(run.final_load, vec![0.0, 1.0]);
    }

    #[test]
    fn zero_cost_prefix_is_free() {
        let zero = Configuration::indicator(1, 0, ExactDist::point(rat(0, 1)));
        let i = inst(1, vec![vec![zero], vec![det(1, 0, 2)]]);
        let run = online_config(&i).unwrap();
        assert_eq!(run.initial_lambda, 2.0);
        assert_eq!(run.records[0].lambda, 2.0);
        assert!(run.records[0].proxy.is_empty());
        assert_eq!(run.resets, 0);
    }

    #[test]
    fn replay_is_identical() {
        let i = inst(2, vec![vec![det(2, 0, 3), det(2, 1, 2)], vec![det(2, 0, 1), det(2, 1, 5)], vec![det(2, 1, 1)]]);
        assert_eq!(online_config(&i).unwrap(), online_config(&i).unwrap());
    }
}
