use confbal::instance::{
    parse_instance, random_tiny_instance, related_to_unrelated, render_instance, unrelated_to_config, ConfigInstance, Configuration,
    ChoiceTable, Instance, InstanceKind, Request, TinyParams, ToChoiceTable,
};
use confbal::lp::solve_lpc;
use confbal::offline::NonAdaptiveAssignment;
use confbal::online::online_config;
use confbal::oracle::optimal_adaptive;
use confbal::stoch::{rat, Rational};
use num_traits::Signed;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tiny(kind: InstanceKind, seed: u64, n: usize, m: usize) -> Instance {
    random_tiny_instance(&TinyParams::new(kind, n, m, 2, 2), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn kind_strategy() -> impl Strategy<Value = InstanceKind> {
    prop_oneof![Just(InstanceKind::Config), Just(InstanceKind::Unrelated), Just(InstanceKind::Related)]
}

fn scaled(inst: &ConfigInstance, f: &Rational) -> ConfigInstance {
    let requests = inst
        .requests
        .iter()
        .map(|r| Request {
            id: r.id,
            configs: r.configs.iter().map(|c| Configuration::new(c.multipliers.clone(), c.law.scale(f))).collect(),
        })
        .collect();
    ConfigInstance::new(inst.m, requests).unwrap()
}

fn breakpoints(inst: &ConfigInstance) -> Vec<Rational> {
    let mut out: Vec<Rational> = inst
        .requests
        .iter()
        .flat_map(|r| &r.configs)
        .flat_map(|c| c.multipliers.iter().flat_map(|a| c.law.support().iter().map(move |(v, _)| a * v)))
        .filter(|x| x.is_positive())
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Feasibility is not monotone across breakpoints: just above 4 the value 4 of the
/// last request moves from the exceptional row onto machine 0.
#[test]
fn lpc_feasibility_can_drop_at_a_breakpoint() {
    let inst = tiny(InstanceKind::Config, 4742, 3, 2).to_config();
    assert!(solve_lpc(&inst, &rat(27, 8)).unwrap().is_some());
    assert!(solve_lpc(&inst, &rat(31, 8)).unwrap().is_some());
    assert!(solve_lpc(&inst, &rat(4, 1)).unwrap().is_some());
    assert!(solve_lpc(&inst, &rat(33, 8)).unwrap().is_none());
    assert!(solve_lpc(&inst, &rat(135, 32)).unwrap().is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn online_loads_and_potential_never_decrease(kind in kind_strategy(), seed in 0u64..10_000, n in 1usize..6, m in 1usize..4) {
        let inst = tiny(kind, seed, n, m).to_config();
        let run = online_config(&inst).unwrap();
        let mut phase = usize::MAX;
        let mut loads = vec![0.0; inst.m + 1];
        for rec in &run.records {
            if rec.phase != phase {
                phase = rec.phase;
                loads = vec![0.0; inst.m + 1];
            }
            prop_assert!(rec.delta_phi >= 0.0);
            for &(i, x) in &rec.proxy {
                prop_assert!(x >= 0.0);
                loads[i] += x;
            }
        }
        prop_assert_eq!(loads, run.final_load.clone());
    }

    #[test]
    fn online_choices_invariant_under_power_of_two_scaling(kind in kind_strategy(), seed in 0u64..10_000, n in 1usize..6, k in -3i64..4) {
        let inst = tiny(kind, seed, n, 3).to_config();
        let f = if k >= 0 { rat(1 << k, 1) } else { rat(1, 1 << -k) };
        let a = online_config(&inst).unwrap();
        let b = online_config(&scaled(&inst, &f)).unwrap();
        prop_assert_eq!(a.choices(), b.choices());
        prop_assert_eq!(a.resets, b.resets);
    }

    #[test]
    fn lpc_feasibility_kept_between_breakpoints(kind in kind_strategy(), seed in 0u64..10_000, t in 1i64..40) {
        let inst = tiny(kind, seed, 3, 2).to_config();
        let tau = rat(t, 8);
        // raising tau keeps every realization on its side of the split until the next breakpoint
        let next = breakpoints(&inst).into_iter().find(|b| *b >= tau);
        let hi = tau.clone() * rat(5, 4);
        let hi = match next {
            Some(b) if b == tau => return Ok(()),
            Some(b) if b < hi => b,
            _ => hi,
        };
        if solve_lpc(&inst, &tau).unwrap().is_some() {
            prop_assert!(solve_lpc(&inst, &hi).unwrap().is_some());
            prop_assert!(solve_lpc(&inst, &((tau + hi) / rat(2, 1))).unwrap().is_some());
        }
    }

    #[test]
    fn reductions_preserve_the_optimum(seed in 0u64..10_000, n in 1usize..4, m in 1usize..4) {
        let Instance::Related(r) = tiny(InstanceKind::Related, seed, n, m) else { unreachable!() };
        let u = related_to_unrelated(&r);
        let c = unrelated_to_config(&u);
        let v = optimal_adaptive(&r.choice_table()).unwrap().value;
        prop_assert_eq!(&v, &optimal_adaptive(&u.choice_table()).unwrap().value);
        prop_assert_eq!(&v, &optimal_adaptive(&c.choice_table()).unwrap().value);
    }

    #[test]
    fn optimum_monotone_under_request_removal(kind in kind_strategy(), seed in 0u64..10_000, keep in 0u8..8) {
        let table = tiny(kind, seed, 3, 2).choice_table();
        let full = optimal_adaptive(&table).unwrap().value;
        let sub = ChoiceTable {
            resources: table.resources,
            requests: table.requests.iter().enumerate().filter(|(j, _)| keep & (1 << j) != 0).map(|(_, r)| r.clone()).collect(),
        };
        prop_assert!(optimal_adaptive(&sub).unwrap().value <= full);
    }

    #[test]
    fn pruned_configurations_get_zero_weight(kind in kind_strategy(), seed in 0u64..10_000, t in 1i64..40) {
        let inst = tiny(kind, seed, 3, 2).to_config();
        let tau = rat(t, 4);
        if let Some(sol) = solve_lpc(&inst, &tau).unwrap() {
            for (j, ws) in sol.weights.iter().enumerate() {
                for &(c, y) in ws {
                    if inst.requests[j].configs[c].expected_max() > tau {
                        prop_assert_eq!(y, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn instance_json_round_trip(kind in prop_oneof![kind_strategy(), Just(InstanceKind::Routing)], seed in 0u64..10_000) {
        let inst = tiny(kind, seed, 3, 3);
        let text = render_instance(&inst);
        prop_assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn assignment_json_round_trip(configs in proptest::collection::vec(0usize..5, 0..6), paths in proptest::collection::vec(proptest::collection::vec(0usize..9, 1..4), 0..4)) {
        for a in [
            NonAdaptiveAssignment::Configs { configs: configs.clone() },
            NonAdaptiveAssignment::Paths { paths: paths.clone() },
            NonAdaptiveAssignment::Groups { machines: configs.clone(), groups: configs.iter().map(|c| c / 2).collect() },
        ] {
            let text = serde_json::to_string(&a).unwrap();
            prop_assert_eq!(serde_json::from_str::<NonAdaptiveAssignment>(&text).unwrap(), a);
        }
    }
}
