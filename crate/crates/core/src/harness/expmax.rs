use std::fmt;
use std::str::FromStr;

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use super::simulate::{mean_stderr, trial_rng};
use crate::error::Error;
use crate::stoch::DiscreteDistribution;

/// A sum of independent terms: `count` copies of each law.
#[derive(Clone, Debug, PartialEq)]
pub struct SumSpec {
    pub terms: Vec<(DiscreteDistribution<f64>, u64)>,
}

impl SumSpec {
    pub fn mean(&self) -> f64 {
        self.terms.iter().map(|(d, k)| d.mean() * *k as f64).sum()
    }

    fn sample(&self, rng: &mut impl rand::Rng) -> f64 {
        let mut s = 0.0;
        for (law, count) in &self.terms {
            let sup = law.support();
            // v * Ber(p) copies collapse to one binomial draw
            if sup.len() == 2 && sup[0].0 == 0.0 {
                let (v, p) = sup[1];
                let k = Binomial::new(*count, p).expect("probability in [0, 1]").sample(rng);
                s += v * k as f64;
            } else {
                for _ in 0..*count {
                    s += law.sample(rng);
                }
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `E[S_i] = tau`.
    SqrtLog,
    /// `E[S_i] = tau ln m`.
    LogM,
    /// `E[S_i] = c_i` with `c_i >= 3/2 c_{i+1}`; the statistic is `max S_i / c_i`.
    Geo,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::SqrtLog => "sqrtlog",
            Regime::LogM => "logm",
            Regime::Geo => "geo",
        }
    }

    /// Test bound used for the regime at `m` sums and threshold `tau`.
    pub fn bound(&self, m: usize, tau: f64) -> f64 {
        let l = (m as f64).ln();
        match self {
            Regime::SqrtLog => 8.0 * tau * l / l.ln(),
            Regime::LogM => 8.0 * tau * l,
            Regime::Geo => 8.0 * tau,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "sqrtlog" => Ok(Regime::SqrtLog),
            "logm" => Ok(Regime::LogM),
            "geo" => Ok(Regime::Geo),
            other => Err(Error::field("regime", format!("unknown regime `{other}` (expected sqrtlog, logm or geo)"))),
        }
    }
}

/// Sums and divisors for a regime with terms bounded in `[0, tau]`.
///
/// `sqrtlog`: `m` Bernoulli terms `tau * Ber(1/m)` per sum. `logm`: the same
/// with success probability `ln m / m`. `geo`: `c_m = 1`,
/// `c_i = ceil(3/2 c_{i+1})` and `2 c_i` terms `tau * Ber(1/2)`.
pub fn regime_sums(regime: Regime, m: usize, tau: f64) -> (Vec<SumSpec>, Vec<f64>) {
    let ber = |p: f64| {
        if p >= 1.0 {
            DiscreteDistribution::point(tau)
        } else {
            DiscreteDistribution::new([(0.0, 1.0 - p), (tau, p)]).expect("valid Bernoulli")
        }
    };
    let mf = m as f64;
    match regime {
        Regime::SqrtLog => (vec![SumSpec { terms: vec![(ber(1.0 / mf), m as u64)] }; m], vec![1.0; m]),
        Regime::LogM => {
            let p = (mf.ln() / mf).min(1.0);
            (vec![SumSpec { terms: vec![(ber(p), m as u64)] }; m], vec![1.0; m])
        }
        Regime::Geo => {
            let mut c = vec![1u64; m];
            for i in (0..m.saturating_sub(1)).rev() {
                c[i] = (3 * c[i + 1]).div_ceil(2);
            }
            let sums = c.iter().map(|&ci| SumSpec { terms: vec![(ber(0.5), 2 * ci)] }).collect();
            (sums, c.iter().map(|&ci| ci as f64).collect())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpMaxEstimate {
    pub trials: usize,
    pub seed: u64,
    pub estimate: f64,
    pub stderr: f64,
}

/// Monte-Carlo estimate of `E[max_i S_i / d_i]`.
pub fn estimate_expected_max(sums: &[SumSpec], divisors: &[f64], trials: usize, seed: u64) -> ExpMaxEstimate {
    assert_eq!(sums.len(), divisors.len());
    assert!(trials >= 1, "need at least one trial");
    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            sums.iter()
                .zip(divisors)
                .map(|(s, d)| s.sample(&mut rng) / d)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let (estimate, stderr) = mean_stderr(&samples);
    ExpMaxEstimate {
        trials,
        seed,
        estimate,
        stderr,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_sums() {
        let point = SumSpec { terms: vec![(DiscreteDistribution::point(2.0), 1)] };
        let e = estimate_expected_max(&[point], &[1.0], 10, 0);
        assert_eq!((e.estimate, e.stderr), (2.0, 0.0));
        let (sums, div) = regime_sums(Regime::SqrtLog, 1, 1.0);
        let e = estimate_expected_max(&sums, &div, 10, 0);
        assert_eq!(e.estimate, 1.0);
    }

    #[test]
    fn regime_means() {
        let (s, _) = regime_sums(Regime::SqrtLog, 64, 1.0);
        assert!((s[0].mean() - 1.0).abs() < 1e-12);
        let (s, _) = regime_sums(Regime::LogM, 64, 1.0);
        assert!((s[0].mean() - 64f64.ln()).abs() < 1e-9);
        let (s, d) = regime_sums(Regime::Geo, 4, 1.0);
        assert_eq!(d, vec![5.0, 3.0, 2.0, 1.0]);
        assert!((s[0].mean() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn regime_names_round_trip() {
        for r in [Regime::SqrtLog, Regime::LogM, Regime::Geo] {
            assert_eq!(r.as_str().parse::<Regime>().unwrap(), r);
        }
        assert!("linear".parse::<Regime>().is_err());
    }
}
