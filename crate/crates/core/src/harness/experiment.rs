use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::simulate::{simulate_assignment, simulate_policy, trial_rng, SimulationReport};
use crate::error::{Error, Result};
use crate::instance::{random_tiny_instance, read_instance, Choice, ChoiceTable, Instance, RoutingInstance, TinyParams, ToChoiceTable};
use crate::offline::{offline_config_balancing, offline_related, offline_routing};
use crate::online::{online_config, online_related, online_routing, SqrtListPolicy};
use crate::stoch::{Rational, Scalar};

/// Stream reserved for the rounding randomness of offline algorithms, so it
/// never overlaps a simulation trial.
pub const ROUNDING_STREAM: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlgorithmId {
    OfflineConfig,
    OfflineRouting,
    OfflineRelated,
    OnlineConfig,
    OnlineRelated,
    OnlineRouting,
    OnlineSqrtBaseline,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 7] = [
        AlgorithmId::OfflineConfig,
        AlgorithmId::OfflineRouting,
        AlgorithmId::OfflineRelated,
        AlgorithmId::OnlineConfig,
        AlgorithmId::OnlineRelated,
        AlgorithmId::OnlineRouting,
        AlgorithmId::OnlineSqrtBaseline,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmId::OfflineConfig => "offline-config",
            AlgorithmId::OfflineRouting => "offline-routing",
            AlgorithmId::OfflineRelated => "offline-related",
            AlgorithmId::OnlineConfig => "online-config",
            AlgorithmId::OnlineRelated => "online-related",
            AlgorithmId::OnlineRouting => "online-routing",
            AlgorithmId::OnlineSqrtBaseline => "online-sqrt-baseline",
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|a| a.as_str()).collect();
            Error::field("algorithm", format!("unknown algorithm `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Clone, Debug)]
pub enum InstanceSource {
    File(PathBuf),
    Inline(Instance),
    /// A random tiny instance drawn with the experiment seed.
    Tiny(TinyParams),
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub instance: InstanceSource,
    pub algorithm: AlgorithmId,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Ok,
    /// No feasible threshold; the report carries the certificate.
    Infeasible,
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Ok => 0,
            Verdict::Infeasible => 2,
        }
    }
}

/// One CSV row. Column order is the field order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub algorithm: String,
    pub kind: String,
    pub seed: u64,
    pub trials: usize,
    pub verdict: Verdict,
    pub tau: Option<f64>,
    pub mean_makespan: Option<f64>,
    pub stderr: Option<f64>,
    pub mean_exceptional: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutcome {
    pub verdict: Verdict,
    pub report: Value,
    pub row: ReportRow,
}

/// Single-choice table of a routing assignment: request `j` loads
/// `X_j / c_e` on every edge of `paths[j]`.
pub fn path_table(r: &RoutingInstance, paths: &[Vec<usize>]) -> ChoiceTable {
    ChoiceTable {
        resources: r.m(),
        requests: paths
            .iter()
            .zip(&r.requests)
            .map(|(p, req)| {
                let foot = p.iter().map(|&e| (e, r.edges[e].capacity.recip())).collect();
                vec![Choice::new(req.demand.clone(), foot)]
            })
            .collect(),
    }
}

fn load(spec: &ExperimentSpec) -> Result<Instance> {
    match &spec.instance {
        InstanceSource::File(p) => read_instance(p),
        InstanceSource::Inline(i) => Ok(i.clone()),
        InstanceSource::Tiny(params) => random_tiny_instance(params, &mut trial_rng(spec.seed, ROUNDING_STREAM - 1)),
    }
}

fn wrong_kind(algo: AlgorithmId, inst: &Instance) -> Error {
    Error::Precondition(format!("{algo} does not run on {} instances", inst.kind()))
}

/// Loads the instance, runs the algorithm, simulates the result and builds
/// the report. An offline threshold search without a feasible threshold is
/// the `Infeasible` verdict, not an error.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let inst = load(spec)?;
    let mut rng = trial_rng(spec.seed, ROUNDING_STREAM);
    let (trials, seed) = (spec.trials, spec.seed);
    let (section, detail, sim, tau): (&str, Value, SimulationReport, Option<Rational>) = match spec.algorithm {
        AlgorithmId::OfflineConfig => {
            let ci = inst.to_config();
            match offline_config_balancing(&ci, &mut rng) {
                Ok((configs, rep)) => {
                    let tau = rep.tau_rational.clone();
                    let sim = simulate_assignment(&ci.choice_table(), &configs, Some(&tau), trials, seed);
                    ("offline", serde_json::to_value(&rep)?, sim, Some(tau))
                }
                Err(Error::NoFeasibleTau { hi }) => return Ok(infeasible(spec, &inst, hi)),
                Err(e) => return Err(e),
            }
        }
        AlgorithmId::OfflineRouting => {
            let Instance::Routing(r) = &inst else { return Err(wrong_kind(spec.algorithm, &inst)) };
            match offline_routing(r, &mut rng) {
                Ok((paths, rep)) => {
                    let tau = rep.tau_rational.clone();
                    let sim = simulate_assignment(&path_table(r, &paths), &vec![0; paths.len()], Some(&tau), trials, seed);
                    ("offline", serde_json::to_value(&rep)?, sim, Some(tau))
                }
                Err(Error::NoFeasibleTau { hi }) => return Ok(infeasible(spec, &inst, hi)),
                Err(e) => return Err(e),
            }
        }
        AlgorithmId::OfflineRelated => {
            let Instance::Related(r) = &inst else { return Err(wrong_kind(spec.algorithm, &inst)) };
            match offline_related(r, &mut rng) {
                Ok(out) => {
                    let tau = out.report.tau_rational.clone();
                    let sim = simulate_policy(&r.choice_table(), &out.policy, Some(&tau), trials, seed)?;
                    ("offline", serde_json::to_value(&out.report)?, sim, Some(tau))
                }
                Err(Error::NoFeasibleTau { hi }) => return Ok(infeasible(spec, &inst, hi)),
                Err(e) => return Err(e),
            }
        }
        AlgorithmId::OnlineConfig => {
            let ci = inst.to_config();
            let run = online_config(&ci)?;
            let tau = run.final_lambda_exact.clone() * Rational::from_integer(2.into());
            let sim = simulate_assignment(&ci.choice_table(), &run.choices(), Some(&tau), trials, seed);
            ("online", serde_json::to_value(&run)?, sim, Some(tau))
        }
        AlgorithmId::OnlineRelated => {
            let Instance::Related(r) = &inst else { return Err(wrong_kind(spec.algorithm, &inst)) };
            let on = online_related(r)?;
            let tau = on.run.final_lambda_exact.clone() * Rational::from_integer(2.into());
            let sim = simulate_policy(&r.choice_table(), &on.policy(), Some(&tau), trials, seed)?;
            ("online", serde_json::to_value(&on.run)?, sim, Some(tau))
        }
        AlgorithmId::OnlineRouting => {
            let Instance::Routing(r) = &inst else { return Err(wrong_kind(spec.algorithm, &inst)) };
            let run = online_routing(r)?;
            let tau = run.final_lambda_exact.clone() * Rational::from_integer(2.into());
            let paths = run.choices();
            let sim = simulate_assignment(&path_table(r, &paths), &vec![0; paths.len()], Some(&tau), trials, seed);
            ("online", serde_json::to_value(&run)?, sim, Some(tau))
        }
        AlgorithmId::OnlineSqrtBaseline => {
            let Instance::Related(r) = &inst else { return Err(wrong_kind(spec.algorithm, &inst)) };
            let pol = SqrtListPolicy::new(r);
            let sim = simulate_policy(&r.choice_table(), &pol, None, trials, seed)?;
            ("online", json!({ "allowed_machines": pol.allowed }), sim, None)
        }
    };
    let row = ReportRow {
        algorithm: spec.algorithm.to_string(),
        kind: inst.kind().to_string(),
        seed,
        trials,
        verdict: Verdict::Ok,
        tau: tau.as_ref().map(Scalar::to_f64),
        mean_makespan: Some(sim.mean_makespan),
        stderr: Some(sim.stderr),
        mean_exceptional: sim.mean_exceptional,
    };
    let mut report = json!({
        "algorithm": spec.algorithm.as_str(),
        "kind": inst.kind().as_str(),
        "seed": seed,
        "trials": trials,
        "verdict": Verdict::Ok,
    });
    report[section] = detail;
    report["simulation"] = serde_json::to_value(&sim)?;
    Ok(ExperimentOutcome {
        verdict: Verdict::Ok,
        report,
        row,
    })
}

fn infeasible(spec: &ExperimentSpec, inst: &Instance, hi: f64) -> ExperimentOutcome {
    ExperimentOutcome {
        verdict: Verdict::Infeasible,
        report: json!({
            "algorithm": spec.algorithm.as_str(),
            "kind": inst.kind().as_str(),
            "seed": spec.seed,
            "trials": spec.trials,
            "verdict": Verdict::Infeasible,
            "certificate": { "infeasible_at": hi },
        }),
        row: ReportRow {
            algorithm: spec.algorithm.to_string(),
            kind: inst.kind().to_string(),
            seed: spec.seed,
            trials: spec.trials,
            verdict: Verdict::Infeasible,
            tau: None,
            mean_makespan: None,
            stderr: None,
            mean_exceptional: None,
        },
    }
}

/// Runs independent experiments in parallel; results keep the input order.
pub fn run_batch(specs: &[ExperimentSpec]) -> Vec<Result<ExperimentOutcome>> {
    specs.par_iter().map(run_experiment).collect()
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_adaptivity_gap_instance, InstanceKind};
    use crate::stoch::rat;

    #[test]
    fn algorithm_names() {
        for a in AlgorithmId::ALL {
            assert_eq!(a.as_str().parse::<AlgorithmId>().unwrap(), a);
        }
        assert!(matches!("offline-magic".parse::<AlgorithmId>(), Err(Error::Field { .. })));
    }

    #[test]
    fn offline_run_reports_threshold_and_estimate() {
        let r = gen_adaptivity_gap_instance(4, &rat(2, 1)).unwrap();
        let spec = ExperimentSpec {
            instance: InstanceSource::Inline(Instance::Related(r)),
            algorithm: AlgorithmId::OfflineConfig,
            trials: 200,
            seed: 4,
        };
        let out = run_experiment(&spec).unwrap();
        assert_eq!(out.verdict, Verdict::Ok);
        assert!(out.report["offline"]["tau"].as_f64().unwrap() <= 2.75);
        assert!(out.row.mean_makespan.unwrap() > 0.0);
        assert_eq!(run_experiment(&spec).unwrap(), out);
    }

    #[test]
    fn wrong_instance_kind_is_an_error() {
        let r = gen_adaptivity_gap_instance(2, &rat(2, 1)).unwrap();
        let spec = ExperimentSpec {
            instance: InstanceSource::Inline(Instance::Related(r)),
            algorithm: AlgorithmId::OnlineRouting,
            trials: 1,
            seed: 0,
        };
        assert!(matches!(run_experiment(&spec), Err(Error::Precondition(_))));
    }

    #[test]
    fn batch_is_reproducible() {
        let specs: Vec<ExperimentSpec> = (0..100)
            .map(|seed| ExperimentSpec {
                instance: InstanceSource::Tiny(TinyParams::new(InstanceKind::Unrelated, 3, 2, 2, 2)),
                algorithm: if seed % 2 == 0 { AlgorithmId::OfflineConfig } else { AlgorithmId::OnlineConfig },
                trials: 50,
                seed,
            })
            .collect();
        let a: Vec<ReportRow> = run_batch(&specs).into_iter().map(|o| o.unwrap().row).collect();
        let b: Vec<ReportRow> = run_batch(&specs).into_iter().map(|o| o.unwrap().row).collect();
        assert_eq!(a.len(), 100);
        assert_eq!(a, b);
        let mut buf = Vec::new();
        write_csv(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 101);
        assert!(text.starts_with("algorithm,kind,seed,trials,verdict,tau,mean_makespan,stderr,mean_exceptional\n"));
    }
}
