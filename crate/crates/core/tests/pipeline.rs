use confbal::harness::{simulate_assignment, simulate_policy, trace_policy, trial_rng, ROUNDING_STREAM};
use confbal::instance::{
    gen_adaptivity_gap_instance, parse_rational, random_routing_instance, random_tiny_instance, Instance, InstanceKind, RoutingInstance,
    RoutingParams, RoutingView, TinyParams, ToChoiceTable,
};
use confbal::lp::{lpc_rows, lpc_upper_bracket, lpp_max_violation, min_feasible_tau, solve_lpp_column_generation, solve_lpp_enumerated};
use confbal::offline::{
    assignment_loads, lpp_upper_bracket, offline_config_balancing, offline_related, offline_routing, randomized_round, DEFAULT_EPS,
};
use confbal::oracle::{evaluate_policy, optimal_adaptive, Decision, FixedAssignment};
use confbal::stoch::{rat, Scalar};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tiny_set(count: u64) -> Vec<Instance> {
    let kinds = [InstanceKind::Config, InstanceKind::Unrelated, InstanceKind::Related];
    (0..count)
        .map(|s| {
            let p = TinyParams::new(kinds[(s % 3) as usize], 3, 2 + (s / 3 % 2) as usize, 2, 2);
            random_tiny_instance(&p, &mut ChaCha8Rng::seed_from_u64(900 + s)).unwrap()
        })
        .collect()
}

#[test]
fn golden_policy_tree_two_machines() {
    let tau = rat(2, 1);
    let table = gen_adaptivity_gap_instance(2, &tau).unwrap().choice_table();
    let opt = optimal_adaptive(&table).unwrap();
    assert_eq!(opt.value, rat(5, 4));
    let root = &opt.tree;
    assert_eq!(root.decision, Some(Decision { request: 0, config: 0 }));
    assert_eq!(root.children.len(), 2);
    let zero = &root.children[0];
    assert_eq!((zero.realized.as_str(), zero.prob.as_str()), ("0", "1/2"));
    assert_eq!(zero.node.decision, Some(Decision { request: 1, config: 0 }));
    assert_eq!(zero.node.children[0].node.loads, vec!["1/2", "0"]);
    let big = &root.children[1];
    assert_eq!((big.realized.as_str(), big.prob.as_str()), ("2", "1/2"));
    assert_eq!(big.node.decision, Some(Decision { request: 1, config: 1 }));
    assert_eq!(big.node.children[0].node.loads, vec!["2", "2"]);
    assert_eq!(root.size(), 5);
}

#[test]
fn threshold_search_certificate_points_the_right_way() {
    for (k, inst) in tiny_set(60).iter().enumerate() {
        let opt = optimal_adaptive(&inst.choice_table()).unwrap().value.to_f64();
        let ci = inst.to_config();
        let (_, rep) = offline_config_balancing(&ci, &mut trial_rng(k as u64, ROUNDING_STREAM)).unwrap();
        assert!(rep.opt_lower_bound <= opt + 1e-12, "instance {k}: bound {} above E[OPT] {opt}", rep.opt_lower_bound);
        assert!(rep.infeasible_below <= rep.tau);
        assert!(rep.tau <= 2.0 * opt * (1.0 + 2e-3) + 1e-12, "instance {k}: tau {} vs E[OPT] {opt}", rep.tau);
    }
}

#[test]
fn monte_carlo_matches_exact_values() {
    for (k, inst) in tiny_set(24).iter().enumerate() {
        let table = inst.choice_table();
        let opt = optimal_adaptive(&table).unwrap();
        let tau = opt.value.clone() * rat(2, 1);
        let sim = simulate_policy(&table, &opt, Some(&tau), 20_000, k as u64).unwrap();
        let exact = opt.value.to_f64();
        assert!((sim.mean_makespan - exact).abs() <= 5.0 * sim.stderr + 1e-12, "instance {k}: {} vs {exact}", sim.mean_makespan);

        let configs = vec![0; table.len()];
        let fixed = evaluate_policy(&table, &FixedAssignment { configs: configs.clone() }, &tau).unwrap();
        let fast = simulate_assignment(&table, &configs, Some(&tau), 20_000, k as u64);
        assert!((fast.mean_makespan - fixed.makespan.to_f64()).abs() <= 5.0 * fast.stderr + 1e-12);
        let exc = fast.mean_exceptional.unwrap();
        assert!((exc - fixed.exceptional.to_f64()).abs() <= 5.0 * fast.stderr_exceptional.unwrap() + 1e-12);
    }
}

#[test]
fn column_generation_agrees_with_enumeration() {
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = RoutingParams { vertices: 5, max_edges: 10, requests: 2, support: 2 };
        let r = random_routing_instance(&params, &mut rng).unwrap();
        let hi = lpp_upper_bracket(&r);
        for k in 1..=6 {
            let tau = hi.clone() * rat(k, 5);
            let (Ok(cg), Ok(full)) = (solve_lpp_column_generation(&r, &tau), solve_lpp_enumerated(&r, &tau)) else {
                continue;
            };
            assert_eq!(cg.feasible, full.feasible, "seed {seed}, tau {tau}");
            if let Some(sol) = &cg.solution {
                let view = RoutingView::new(&r, &tau);
                assert!(lpp_max_violation(&view, sol) <= 1e-7);
            }
        }
        let (paths, rep) = offline_routing(&r, &mut trial_rng(seed, ROUNDING_STREAM)).unwrap();
        assert!(solve_lpp_enumerated(&r, &rep.tau_rational).unwrap().feasible);
        let view = RoutingView::new(&r, &rep.tau_rational);
        for (j, p) in paths.iter().enumerate() {
            assert!(view.paths(j).contains(p));
        }
    }
}

#[test]
fn rounding_matches_lp_rows_on_average() {
    for (k, inst) in tiny_set(12).iter().enumerate() {
        let ci = inst.to_config();
        let search = min_feasible_tau(&ci, rat(0, 1), lpc_upper_bracket(&ci), DEFAULT_EPS).unwrap();
        let (rows, exc_row) = lpc_rows(&ci, &search.tau, &search.solution);
        let mut rng = trial_rng(k as u64, ROUNDING_STREAM);
        let draws = 4000;
        let mut sums = vec![(0.0, 0.0); ci.m + 1];
        for _ in 0..draws {
            let configs = randomized_round(&search.solution, &mut rng);
            let (t, e) = assignment_loads(&ci, &search.tau, &configs);
            for (s, x) in sums.iter_mut().zip(t.iter().chain([e].iter())) {
                s.0 += x;
                s.1 += x * x;
            }
        }
        let tau = search.tau.to_f64();
        for (i, (s, s2)) in sums.iter().enumerate() {
            let mean = s / draws as f64;
            let sd = (s2 / draws as f64 - mean * mean).max(0.0).sqrt();
            let target = if i < ci.m { rows[i] } else { exc_row };
            assert!((mean - target).abs() <= 4.0 * sd / (draws as f64).sqrt() + 1e-9, "instance {k} row {i}: {mean} vs {target}");
            assert!(target <= tau * (1.0 + 1e-9));
        }
    }
}

#[test]
fn realized_exceptional_load_within_reported_total() {
    for (k, inst) in tiny_set(30).iter().enumerate() {
        let ci = inst.to_config();
        let (configs, rep) = offline_config_balancing(&ci, &mut trial_rng(k as u64, ROUNDING_STREAM)).unwrap();
        let sim = simulate_assignment(&ci.choice_table(), &configs, Some(&rep.tau_rational), 10_000, k as u64);
        let exc = sim.mean_exceptional.unwrap();
        assert!(exc <= rep.exceptional_total + 4.0 * sim.stderr_exceptional.unwrap() + 1e-12);
    }
}

#[test]
fn group_list_scheduling_pathwise_bound() {
    for seed in 0..30u64 {
        let p = TinyParams::new(InstanceKind::Related, 8, 7, 2, 2);
        let Instance::Related(r) = random_tiny_instance(&p, &mut ChaCha8Rng::seed_from_u64(300 + seed)).unwrap() else { unreachable!() };
        let out = offline_related(&r, &mut trial_rng(seed, ROUNDING_STREAM)).unwrap();
        let table = r.choice_table();
        for trial in 0..50 {
            let (steps, loads) = trace_policy(&table, &out.policy, seed, trial).unwrap();
            for (g, machines) in out.policy.groups.iter().enumerate() {
                let longest = steps
                    .iter()
                    .filter(|s| out.policy.job_group[s.request] == g)
                    .map(|s| parse_rational(&s.realized).unwrap() / r.speeds[s.config].clone())
                    .max()
                    .unwrap_or_else(|| rat(0, 1));
                let total = machines.iter().fold(rat(0, 1), |a, &i| a + loads[i].clone());
                let avg = total / rat(machines.len() as i64, 1);
                for &i in machines {
                    assert!(loads[i] <= avg.clone() + longest.clone(), "seed {seed} trial {trial} machine {i}");
                }
            }
            // jobs only land on machines of their own group
            for s in &steps {
                assert!(out.policy.groups[out.policy.job_group[s.request]].contains(&s.config));
            }
        }
    }
}

fn dfs_paths(r: &RoutingInstance, view: &RoutingView<'_>, j: usize, at: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if at == r.requests[j].sink {
        out.push(path.clone());
        return;
    }
    for (e, edge) in r.edges.iter().enumerate() {
        if edge.tail == at && view.is_admissible(j, e) {
            path.push(e);
            dfs_paths(r, view, j, edge.head, path, out);
            path.pop();
        }
    }
}

#[test]
fn path_enumeration_matches_dfs() {
    for seed in 0..60u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
        let params = RoutingParams { vertices: 6, max_edges: 12, requests: 2, support: 2 };
        let r = random_routing_instance(&params, &mut rng).unwrap();
        let hi = lpp_upper_bracket(&r);
        for k in 1..=3 {
            let tau = hi.clone() * rat(k, 3);
            let view = RoutingView::new(&r, &tau);
            for j in 0..r.requests.len() {
                let mut want = Vec::new();
                dfs_paths(&r, &view, j, r.requests[j].source, &mut Vec::new(), &mut want);
                let mut got = view.paths(j);
                want.sort();
                got.sort();
                assert_eq!(got, want, "seed {seed} request {j}");
            }
        }
    }
}
