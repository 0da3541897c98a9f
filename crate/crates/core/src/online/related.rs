use num_traits::Zero;

use super::double::{guess_and_double, Attempt, OnlineRun};
use super::potential::{online_step, PotentialState, StepOutcome};
use crate::error::Result;
use crate::instance::{smooth_machines, RelatedInstance, SmoothedGroups};
use crate::oracle::{AdaptivePolicy, Decision};
use crate::stoch::{ExactDist, Rational, Scalar};

/// Executes a job-to-group map by list scheduling: each job, in index order,
/// goes to the currently least loaded machine of its group (lowest id on
/// ties). Machine ids refer to the instance being executed.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupListPolicy {
    pub groups: Vec<Vec<usize>>,
    pub job_group: Vec<usize>,
}

impl GroupListPolicy {
    /// Policy on the original machines of `r` from a group map over `smoothed`.
    pub fn on_original(smoothed: &SmoothedGroups, job_group: Vec<usize>) -> Self {
        Self {
            groups: smoothed.groups.iter().map(|g| g.original.clone()).collect(),
            job_group,
        }
    }

    pub fn machine_for<T: PartialOrd>(&self, job: usize, loads: &[T]) -> usize {
        least_loaded(&self.groups[self.job_group[job]], loads)
    }
}

pub(crate) fn least_loaded<T: PartialOrd>(machines: &[usize], loads: &[T]) -> usize {
    let mut best = machines[0];
    for &i in &machines[1..] {
        if loads[i] < loads[best] {
            best = i;
        }
    }
    best
}

impl AdaptivePolicy for GroupListPolicy {
    fn decide(&self, remaining: &[bool], loads: &[Rational]) -> Option<Decision> {
        let request = remaining.iter().position(|r| *r)?;
        Some(Decision {
            request,
            config: self.machine_for(request, loads),
        })
    }
}

/// Per-group proxies of a job: `x_0 = E[(X/s_k)^E]`, `x_{k+1} = E[(X/s_k)^T] / m_k`.
pub fn group_proxies(groups: &SmoothedGroups, job: &ExactDist, tau: &Rational) -> Vec<Vec<(usize, f64)>> {
    groups
        .groups
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let f = g.speed.recip();
            let e = job.scaled_exceptional_mean(&f, tau);
            let t = job.scaled_truncated_mean(&f, tau) / Rational::from_integer(g.len().into());
            let mut p = Vec::with_capacity(2);
            if !e.is_zero() {
                p.push((0, e.to_f64()));
            }
            if !t.is_zero() {
                p.push((k + 1, t.to_f64()));
            }
            p
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum RelatedStep {
    Commit { group: usize, machine: usize, delta: f64 },
    Fail,
}

/// Chooses a group by the potential rule over `groups.len() + 1` resources,
/// then the least loaded machine of that group. `loads` are realized loads
/// indexed by the machine ids stored in the groups' `machines`.
pub fn online_related_step<T: PartialOrd>(
    groups: &SmoothedGroups,
    state: &mut PotentialState,
    job: &ExactDist,
    loads: &[T],
) -> RelatedStep {
    let tau = state.tau.clone();
    match online_step(state, &group_proxies(groups, job, &tau)) {
        StepOutcome::Commit { index, delta, .. } => RelatedStep::Commit {
            group: index,
            machine: least_loaded(&groups.groups[index].machines, loads),
            delta,
        },
        StepOutcome::Fail { .. } => RelatedStep::Fail,
    }
}

/// Online related machines: the group of each job is fixed online by the
/// potential rule (it depends only on the laws), the machine by list
/// scheduling at execution time.
pub struct OnlineRelated {
    pub groups: SmoothedGroups,
    pub smoothed: RelatedInstance,
    /// Choice per job is a group index.
    pub run: OnlineRun<usize>,
}

impl OnlineRelated {
    pub fn policy(&self) -> GroupListPolicy {
        GroupListPolicy::on_original(&self.groups, self.run.choices())
    }
}

pub fn online_related(r: &RelatedInstance) -> Result<OnlineRelated> {
    let (groups, smoothed) = smooth_machines(r);
    let fastest = groups.groups.last().expect("a group survives").speed.clone();
    let run = guess_and_double(
        r.jobs.len(),
        groups.len(),
        |j| Ok((r.jobs[j].mean() / fastest.clone(), groups.len() - 1)),
        |st, j| {
            let tau = st.tau.clone();
            Ok(match online_step(st, &group_proxies(&groups, &r.jobs[j], &tau)) {
                StepOutcome::Commit { index, delta, proxy } => Attempt::Commit {
                    choice: index,
                    proxy,
                    delta,
                },
                StepOutcome::Fail { .. } => Attempt::Fail,
            })
        },
    )?;
    Ok(OnlineRelated { groups, smoothed, run })
}
