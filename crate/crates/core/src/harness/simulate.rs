use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::ChoiceTable;
use crate::oracle::AdaptivePolicy;
use crate::stoch::{Rational, Scalar};

/// Generator for one trial: stream `trial` of the seeded ChaCha8 generator.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// The uniform variate that realizes `request` in a trial. It depends only on
/// `(seed, trial, request)`, not on the order in which requests are served.
pub fn request_uniform(rng: &mut ChaCha8Rng, request: usize) -> f64 {
    rng.set_word_pos(2 * request as u128);
    rng.random()
}

/// Summation by recursive halving in index order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// Mean and standard error (sample deviation over `sqrt(n)`).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub trials: usize,
    pub seed: u64,
    pub mean_makespan: f64,
    pub stderr: f64,
    pub mean_loads: Vec<f64>,
    /// Threshold for the exceptional statistic, if any.
    pub tau: Option<f64>,
    /// Mean of `sum_j max_i X^E_ij(c_j)`.
    pub mean_exceptional: Option<f64>,
    pub stderr_exceptional: Option<f64>,
}

struct Trial {
    makespan: f64,
    loads: Vec<f64>,
    exceptional: f64,
}

fn aggregate(trials: Vec<Trial>, resources: usize, seed: u64, tau: Option<&Rational>) -> SimulationReport {
    let mk: Vec<f64> = trials.iter().map(|t| t.makespan).collect();
    let (mean, stderr) = mean_stderr(&mk);
    let ex: Vec<f64> = trials.iter().map(|t| t.exceptional).collect();
    let (mean_ex, se_ex) = mean_stderr(&ex);
    let mean_loads = (0..resources)
        .map(|i| {
            let col: Vec<f64> = trials.iter().map(|t| t.loads[i]).collect();
            pairwise_sum(&col) / trials.len() as f64
        })
        .collect();
    SimulationReport {
        trials: trials.len(),
        seed,
        mean_makespan: mean,
        stderr,
        mean_loads,
        tau: tau.map(Scalar::to_f64),
        mean_exceptional: tau.map(|_| mean_ex),
        stderr_exceptional: tau.map(|_| se_ex),
    }
}

/// One committed request of a simulated trial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceStep {
    pub request: usize,
    pub config: usize,
    pub realized: String,
}

/// Exact execution of an adaptive policy on one trial. Returns the decisions
/// with their realized scalars and the final loads.
pub fn trace_policy(table: &ChoiceTable, policy: &dyn AdaptivePolicy, seed: u64, trial: u64) -> Result<(Vec<TraceStep>, Vec<Rational>)> {
    let mut rng = trial_rng(seed, trial);
    let mut remaining = vec![true; table.len()];
    let mut loads = vec![Rational::zero(); table.resources];
    let mut steps = Vec::with_capacity(table.len());
    for _ in 0..table.len() {
        let d = policy
            .decide(&remaining, &loads)
            .ok_or_else(|| Error::IncompletePolicy(format!("trial {trial} after {} requests", steps.len())))?;
        if !remaining.get(d.request).copied().unwrap_or(false) || d.config >= table.requests[d.request].len() {
            return Err(Error::IncompletePolicy(format!("invalid decision {d:?} in trial {trial}")));
        }
        let choice = table.choice(d.request, d.config);
        let x = choice.law.quantile(request_uniform(&mut rng, d.request)).clone();
        for (i, a) in &choice.footprint {
            loads[*i] += a * &x;
        }
        remaining[d.request] = false;
        steps.push(TraceStep {
            request: d.request,
            config: d.config,
            realized: x.to_string(),
        });
    }
    Ok((steps, loads))
}

/// Monte-Carlo estimate of an adaptive policy. Loads are tracked exactly so
/// the policy sees the same states as under exact evaluation.
pub fn simulate_policy(
    table: &ChoiceTable,
    policy: &dyn AdaptivePolicy,
    tau: Option<&Rational>,
    trials: usize,
    seed: u64,
) -> Result<SimulationReport> {
    assert!(trials >= 1, "need at least one trial");
    let outcomes: Result<Vec<Trial>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let (steps, loads) = trace_policy(table, policy, seed, t)?;
            let mut exceptional = Rational::zero();
            if let Some(tau) = tau {
                for s in &steps {
                    let choice = table.choice(s.request, s.config);
                    let x: Rational = s.realized.parse().expect("rendered rational");
                    let peak = choice.max_multiplier.clone() * x;
                    if &peak >= tau {
                        exceptional += peak;
                    }
                }
            }
            Ok(Trial {
                makespan: loads.iter().max().map(Scalar::to_f64).unwrap_or(0.0),
                loads: loads.iter().map(Scalar::to_f64).collect(),
                exceptional: exceptional.to_f64(),
            })
        })
        .collect();
    Ok(aggregate(outcomes?, table.resources, seed, tau))
}

/// Fast floating-point simulation of a fixed assignment. Uses the same
/// per-request variates as [`simulate_policy`].
pub fn simulate_assignment(
    table: &ChoiceTable,
    configs: &[usize],
    tau: Option<&Rational>,
    trials: usize,
    seed: u64,
) -> SimulationReport {
    assert!(trials >= 1, "need at least one trial");
    assert_eq!(configs.len(), table.len(), "one configuration per request");
    let chosen: Vec<_> = configs
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let ch = table.choice(j, c);
            let foot: Vec<(usize, f64)> = ch.footprint.iter().map(|(i, a)| (*i, a.to_f64())).collect();
            let thresh = tau.map(|t| (t.clone() / ch.max_multiplier.clone()).to_f64());
            (ch.law.to_float(), foot, ch.max_multiplier.to_f64(), thresh, ch.max_multiplier.is_zero())
        })
        .collect();
    let outcomes: Vec<Trial> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let mut loads = vec![0.0; table.resources];
            let mut exceptional = 0.0;
            for (j, (law, foot, amax, thresh, zero)) in chosen.iter().enumerate() {
                let x = *law.quantile(request_uniform(&mut rng, j));
                for &(i, a) in foot {
                    loads[i] += a * x;
                }
                if let Some(th) = thresh {
                    if !zero && x >= *th {
                        exceptional += amax * x;
                    }
                }
            }
            Trial {
                makespan: loads.iter().cloned().fold(0.0, f64::max),
                loads,
                exceptional,
            }
        })
        .collect();
    aggregate(outcomes, table.resources, seed, tau)
}
