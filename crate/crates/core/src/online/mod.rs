//! Online algorithms driven by the exponential potential
//! `phi(L) = sum_i 1.5^(L_i / tau)` over expected truncated loads plus one
//! virtual resource for expected exceptional parts.

mod double;
mod potential;
mod related;
mod route;
mod sqrt;

pub use double::{
    config_attempt, guess_and_double, online_config, online_config_fixed, Attempt, FixedLambdaRun, OnlineRun, TraceRecord,
    MAX_PHASES,
};
pub use potential::{config_proxy, delta_phi, ell, online_step, potential, LoadVector, PotentialState, StepOutcome, BASE};
pub use related::{group_proxies, online_related, online_related_step, GroupListPolicy, OnlineRelated, RelatedStep};
pub use route::{best_route, best_route_brute_force, online_route_step, online_routing, path_proxy, RouteStep, TIE_TOL};
pub use sqrt::{nonclairvoyant_sqrt_list, sqrt_fast_set, SqrtListPolicy, SqrtListScheduler};
