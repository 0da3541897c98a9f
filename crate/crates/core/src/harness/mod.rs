//! Monte-Carlo evaluation, expected-maximum estimation and experiment runs.
//!
//! Every trial draws from its own ChaCha8 stream and every request from a
//! fixed position inside it, so results do not depend on thread scheduling.

mod experiment;
mod expmax;
mod simulate;

pub use experiment::{
    path_table, run_batch, run_experiment, write_csv, AlgorithmId, ExperimentOutcome, ExperimentSpec, InstanceSource, ReportRow, Verdict,
    ROUNDING_STREAM,
};
pub use expmax::{estimate_expected_max, regime_sums, ExpMaxEstimate, Regime, SumSpec};
pub use simulate::{
    mean_stderr, pairwise_sum, request_uniform, simulate_assignment, simulate_policy, trace_policy, trial_rng, SimulationReport, TraceStep,
};
