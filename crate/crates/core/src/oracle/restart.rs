use num_traits::Zero;

use super::dp::{mask_ids, Branch, OptimalDp, PolicyTree, DEFAULT_STATE_LIMIT};
use super::{max_load, PolicyValue};
use crate::error::{Error, Result};
use crate::instance::ChoiceTable;
use crate::stoch::Rational;

/// Exact value of the restart policy plus what it committed to.
#[derive(Clone, Debug)]
pub struct RestartOutcome {
    pub value: PolicyValue,
    /// Largest `E[max_i X_ij(c)]` over every configuration the policy can commit.
    pub max_committed_expected_max: Rational,
    pub tree: PolicyTree,
}

/// The restart transform of the optimal adaptive policy at threshold `tau`.
///
/// Follows the optimal policy of the current remaining set using only loads
/// accumulated since the last restart. Before committing a configuration
/// with `E[max] > tau` it restarts on the same remaining set; after a committed
/// request realizes `max_i X_ij(c) >= tau` it restarts on what is left. The
/// true loads keep accumulating across restarts and determine the makespan.
///
/// Fails with a precondition error if a freshly started optimal policy opens
/// with a too-large configuration, which cannot happen when
/// `tau >= 2 E[OPT]`.
pub fn restart_policy(table: &ChoiceTable, tau: &Rational) -> Result<RestartOutcome> {
    let mut dp = OptimalDp::new(table, DEFAULT_STATE_LIMIT)?;
    let zero = vec![Rational::zero(); table.resources];
    let mask = dp.full_mask();
    let (makespan, exceptional, max_committed, tree) = run(&mut dp, tau, mask, &zero, &zero, true)?;
    Ok(RestartOutcome {
        value: PolicyValue { makespan, exceptional },
        max_committed_expected_max: max_committed,
        tree,
    })
}

fn run(
    dp: &mut OptimalDp<'_>,
    tau: &Rational,
    mask: u64,
    local: &[Rational],
    real: &[Rational],
    fresh: bool,
) -> Result<(Rational, Rational, Rational, PolicyTree)> {
    let leaf = |decision| PolicyTree {
        remaining: mask_ids(mask),
        loads: real.iter().map(ToString::to_string).collect(),
        decision,
        children: Vec::new(),
    };
    if mask == 0 {
        return Ok((max_load(real), Rational::zero(), Rational::zero(), leaf(None)));
    }
    let d = dp.decision(mask, local)?.expect("nonempty remaining set");
    let table = dp.table();
    let choice = table.choice(d.request, d.config);
    let expected_max = choice.expected_max();
    if &expected_max > tau {
        if fresh {
            return Err(Error::Precondition(format!(
                "optimal policy of requests {:?} opens with E[max] = {expected_max} > tau = {tau}",
                mask_ids(mask)
            )));
        }
        let zero = vec![Rational::zero(); local.len()];
        return run(dp, tau, mask, &zero, real, true);
    }
    let rest = mask & !(1 << d.request);
    let mut makespan = Rational::zero();
    let mut exceptional = Rational::zero();
    let mut max_committed = expected_max;
    let mut node = leaf(Some(d));
    for (x, p) in choice.law.support() {
        let mut next_real = real.to_vec();
        let mut next_local = local.to_vec();
        for (i, a) in &choice.footprint {
            let add = a * x;
            next_real[*i] += &add;
            next_local[*i] += add;
        }
        let peak = choice.max_multiplier.clone() * x;
        let restart = &peak >= tau;
        let (mk, ex, mc, sub) = if restart {
            let zero = vec![Rational::zero(); local.len()];
            run(dp, tau, rest, &zero, &next_real, true)?
        } else {
            run(dp, tau, rest, &next_local, &next_real, false)?
        };
        let here = if restart { peak } else { Rational::zero() };
        makespan += mk * p;
        exceptional += (ex + here) * p;
        if mc > max_committed {
            max_committed = mc;
        }
        node.children.push(Branch {
            realized: x.to_string(),
            prob: p.to_string(),
            restart,
            node: sub,
        });
    }
    Ok((makespan, exceptional, max_committed, node))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_adaptivity_gap_instance, ToChoiceTable, UnrelatedInstance};
    use crate::oracle::optimal_adaptive;
    use crate::stoch::{rat, ExactDist};

    #[test]
    fn single_job_restart_on_exceptional_realization() {
        let law = ExactDist::new([(rat(0, 1), rat(1, 2)), (rat(10, 1), rat(1, 2))]).unwrap();
        let u = UnrelatedInstance::new(1, vec![vec![law]]).unwrap();
        let table = u.choice_table();
        let out = restart_policy(&table, &rat(10, 1)).unwrap();
        assert_eq!(out.value.makespan, rat(5, 1));
        assert_eq!(out.value.exceptional, rat(5, 1));
        assert!(out.tree.children[1].restart);
    }

    #[test]
    fn no_restart_when_nothing_is_exceptional() {
        let tau = rat(2, 1);
        let table = gen_adaptivity_gap_instance(4, &tau).unwrap().choice_table();
        let opt = optimal_adaptive(&table).unwrap();
        let t = rat(11, 4);
        let out = restart_policy(&table, &t).unwrap();
        assert_eq!(out.value.makespan, opt.value);
        assert_eq!(out.value.exceptional, rat(0, 1));
        assert!(out.max_committed_expected_max <= t);
    }

    #[test]
    fn too_small_threshold_is_a_precondition_error() {
        let u = UnrelatedInstance::new(1, vec![vec![ExactDist::point(rat(3, 1))]]).unwrap();
        assert!(matches!(
            restart_policy(&u.choice_table(), &rat(1, 1)),
            Err(Error::Precondition(_))
        ));
    }
}
