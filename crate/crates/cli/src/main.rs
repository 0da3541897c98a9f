use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use confbal::harness::{
    estimate_expected_max, path_table, regime_sums, run_experiment, simulate_assignment, simulate_policy, trial_rng, write_csv,
    AlgorithmId, ExperimentSpec, InstanceSource, Regime,
};
use confbal::instance::{
    gen_adaptivity_gap_instance, gen_clairvoyance_adversary_instance, parse_rational, random_tiny_instance, read_instance,
    render_instance, smooth_machines, Instance, InstanceKind, TinyParams, ToChoiceTable,
};
use confbal::lp::{build_lpc, solve_feasibility, solve_lpp_column_generation, Feasibility};
use confbal::offline::NonAdaptiveAssignment;
use confbal::online::GroupListPolicy;
use confbal::oracle::{evaluate_policy, optimal_adaptive, restart_policy, FixedAssignment};
use confbal::stoch::{Rational, Scalar};
use confbal::Error;

#[derive(Parser)]
#[command(name = "confbal", version, about = "Configuration balancing with stochastic requests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Config,
    Unrelated,
    Related,
    Routing,
    AdaptivityGap,
    Clairvoyance,
}

#[derive(Clone, Copy, ValueEnum)]
enum OfflineAlgo {
    Config,
    Routing,
    Related,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnlineAlgo {
    Config,
    Related,
    Routing,
    SqrtBaseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleWhat {
    Opt,
    Restart,
    Eval,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Configurations per request (config kind).
        #[arg(long, default_value_t = 2)]
        q: usize,
        /// Support size of each law.
        #[arg(long, default_value_t = 2)]
        support: usize,
        /// Threshold of the adaptivity-gap instance.
        #[arg(long, default_value = "2")]
        tau: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smooth the machines of a related instance.
    Smooth {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an offline algorithm and simulate its result.
    Offline {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        algo: OfflineAlgo,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run an online algorithm and simulate its result.
    Online {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        algo: OnlineAlgo,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Exact adaptive analysis of a tiny instance.
    Oracle {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        tau: Option<String>,
        #[arg(long, value_enum)]
        what: OracleWhat,
        /// Fixed assignment to evaluate (with --what eval).
        #[arg(long)]
        policy_file: Option<PathBuf>,
    },
    /// Feasibility of the configuration LP (or the path LP for routing) at a threshold.
    LpCheck {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        tau: String,
        /// Write the LP in CPLEX LP format.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Estimate E[max_i S_i] for one of the maximal-inequality regimes.
    Expmax {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long)]
        regime: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
    },
    /// Monte-Carlo evaluation of a stored assignment.
    Simulate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        policy_file: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        tau: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn rational_arg(s: &str) -> Result<Rational> {
    parse_rational(s).ok_or_else(|| anyhow!("`{s}` is not a rational number"))
}

fn positive_tau(s: &str) -> Result<Rational> {
    let t = rational_arg(s)?;
    if t <= Rational::from_integer(0.into()) {
        bail!("threshold must be positive, got {s}");
    }
    Ok(t)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Gen { kind, m, n, seed, q, support, tau, out } => {
            let inst = match kind {
                GenKind::AdaptivityGap => Instance::Related(gen_adaptivity_gap_instance(m, &rational_arg(&tau)?)?),
                GenKind::Clairvoyance => Instance::Related(gen_clairvoyance_adversary_instance(m)?),
                k => {
                    let kind = match k {
                        GenKind::Config => InstanceKind::Config,
                        GenKind::Unrelated => InstanceKind::Unrelated,
                        GenKind::Related => InstanceKind::Related,
                        _ => InstanceKind::Routing,
                    };
                    random_tiny_instance(&TinyParams::new(kind, n, m, q, support), &mut trial_rng(seed, 0))?
                }
            };
            emit(&render_instance(&inst), out.as_deref())?;
            Ok(0)
        }
        Command::Smooth { input, out } => {
            let Instance::Related(r) = read_instance(&input)? else {
                bail!("smooth needs a related instance");
            };
            let (groups, smoothed) = smooth_machines(&r);
            let summary: Vec<Value> = groups
                .groups
                .iter()
                .map(|g| json!({ "speed": g.speed.to_string(), "machines": g.machines, "original": g.original }))
                .collect();
            let check = groups.check(r.machines());
            let text = render_instance(&Instance::Related(smoothed));
            match out {
                Some(p) => {
                    emit(&text, Some(&p))?;
                    print!("{}", pretty(&json!({ "groups": summary, "check": check.err().unwrap_or_else(|| "ok".into()) })));
                }
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Offline { input, algo, seed, trials, report, format } => {
            let algorithm = match algo {
                OfflineAlgo::Config => AlgorithmId::OfflineConfig,
                OfflineAlgo::Routing => AlgorithmId::OfflineRouting,
                OfflineAlgo::Related => AlgorithmId::OfflineRelated,
            };
            experiment(input, algorithm, seed, trials, report, format)
        }
        Command::Online { input, algo, seed, trials, report, format } => {
            let algorithm = match algo {
                OnlineAlgo::Config => AlgorithmId::OnlineConfig,
                OnlineAlgo::Related => AlgorithmId::OnlineRelated,
                OnlineAlgo::Routing => AlgorithmId::OnlineRouting,
                OnlineAlgo::SqrtBaseline => AlgorithmId::OnlineSqrtBaseline,
            };
            experiment(input, algorithm, seed, trials, report, format)
        }
        Command::Oracle { input, tau, what, policy_file } => oracle(&input, tau.as_deref(), what, policy_file.as_deref()),
        Command::LpCheck { input, tau, dump } => lp_check(&input, &positive_tau(&tau)?, dump.as_deref()),
        Command::Expmax { m, trials, regime, seed, tau } => {
            let regime: Regime = regime.parse()?;
            if m == 0 || trials == 0 {
                bail!("--m and --trials must be positive");
            }
            let (sums, div) = regime_sums(regime, m, tau);
            let est = estimate_expected_max(&sums, &div, trials, seed);
            let bound = regime.bound(m, tau);
            print!(
                "{}",
                pretty(&json!({
                    "regime": regime.as_str(),
                    "m": m,
                    "tau": tau,
                    "trials": est.trials,
                    "seed": est.seed,
                    "estimate": est.estimate,
                    "stderr": est.stderr,
                    "bound": bound,
                    "within_bound": est.estimate <= bound,
                }))
            );
            Ok(0)
        }
        Command::Simulate { input, policy_file, trials, seed, tau } => simulate(&input, &policy_file, trials, seed, tau.as_deref()),
    }
}

fn experiment(input: PathBuf, algorithm: AlgorithmId, seed: u64, trials: usize, report: Option<PathBuf>, format: Format) -> Result<u8> {
    if trials == 0 {
        bail!("--trials must be positive");
    }
    let spec = ExperimentSpec {
        instance: InstanceSource::File(input),
        algorithm,
        trials,
        seed,
    };
    let out = run_experiment(&spec)?;
    let text = match format {
        Format::Json => pretty(&out.report),
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(std::slice::from_ref(&out.row), &mut buf)?;
            String::from_utf8(buf)?
        }
    };
    emit(&text, report.as_deref())?;
    Ok(out.verdict.exit_code() as u8)
}

fn load_assignment(path: &Path) -> Result<NonAdaptiveAssignment> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let found = if v.get("type").is_some() {
        Some(&v)
    } else {
        v.get("assignment").or_else(|| v.pointer("/offline/assignment"))
    };
    let found = found.ok_or_else(|| anyhow!("{} holds no assignment", path.display()))?;
    Ok(serde_json::from_value(found.clone())?)
}

fn oracle(input: &Path, tau: Option<&str>, what: OracleWhat, policy_file: Option<&Path>) -> Result<u8> {
    let inst = read_instance(input)?;
    let table = inst.choice_table();
    let tau = tau.map(positive_tau).transpose()?;
    let v = match what {
        OracleWhat::Opt => {
            let opt = optimal_adaptive(&table)?;
            json!({
                "value": opt.value.to_string(),
                "value_f64": opt.value.to_f64(),
                "states": opt.states(),
                "tree": opt.tree,
            })
        }
        OracleWhat::Restart => {
            let tau = tau.ok_or_else(|| anyhow!("--what restart needs --tau"))?;
            let out = restart_policy(&table, &tau)?;
            json!({
                "tau": tau.to_string(),
                "makespan": out.value.makespan.to_string(),
                "exceptional": out.value.exceptional.to_string(),
                "max_committed_expected_max": out.max_committed_expected_max.to_string(),
                "tree": out.tree,
            })
        }
        OracleWhat::Eval => {
            let tau = tau.ok_or_else(|| anyhow!("--what eval needs --tau"))?;
            let path = policy_file.ok_or_else(|| anyhow!("--what eval needs --policy-file"))?;
            let NonAdaptiveAssignment::Configs { configs } = load_assignment(path)? else {
                bail!("--what eval takes a configuration assignment");
            };
            let val = evaluate_policy(&table, &FixedAssignment { configs }, &tau)?;
            json!({
                "tau": tau.to_string(),
                "makespan": val.makespan.to_string(),
                "exceptional": val.exceptional.to_string(),
            })
        }
    };
    print!("{}", pretty(&v));
    Ok(0)
}

fn lp_check(input: &Path, tau: &Rational, dump: Option<&Path>) -> Result<u8> {
    let inst = read_instance(input)?;
    let (feasible, detail) = match &inst {
        Instance::Routing(r) => match solve_lpp_column_generation(r, tau) {
            Ok(lp) => (lp.feasible, json!({ "lp": "path", "violation": lp.violation, "columns": lp.columns, "rounds": lp.rounds })),
            Err(Error::NoFeasiblePath { request }) => (false, json!({ "lp": "path", "no_admissible_path": request })),
            Err(e) => return Err(e.into()),
        },
        other => {
            let model = build_lpc(&other.to_config(), tau);
            if let Some(p) = dump {
                fs::write(p, model.lp.to_lp_format()).with_context(|| format!("writing {}", p.display()))?;
            }
            match solve_feasibility(&model.lp)? {
                Feasibility::Feasible(x) => (true, json!({ "lp": "config", "max_violation": model.lp.max_violation(&x), "variables": model.vars.len() })),
                Feasibility::Infeasible { violation } => (false, json!({ "lp": "config", "phase_one": violation, "variables": model.vars.len() })),
            }
        }
    };
    let mut v = json!({ "tau": tau.to_string(), "feasible": feasible });
    if let (Value::Object(a), Value::Object(b)) = (&mut v, detail) {
        a.extend(b);
    }
    print!("{}", pretty(&v));
    Ok(if feasible { 0 } else { 2 })
}

fn simulate(input: &Path, policy_file: &Path, trials: usize, seed: u64, tau: Option<&str>) -> Result<u8> {
    if trials == 0 {
        bail!("--trials must be positive");
    }
    let inst = read_instance(input)?;
    let tau = tau.map(positive_tau).transpose()?;
    let rep = match (load_assignment(policy_file)?, &inst) {
        (NonAdaptiveAssignment::Configs { configs }, inst) => {
            let table = inst.choice_table();
            if configs.len() != table.len() {
                bail!("assignment has {} entries for {} requests", configs.len(), table.len());
            }
            simulate_assignment(&table, &configs, tau.as_ref(), trials, seed)
        }
        (NonAdaptiveAssignment::Paths { paths }, Instance::Routing(r)) => {
            if paths.len() != r.requests.len() {
                bail!("assignment has {} paths for {} requests", paths.len(), r.requests.len());
            }
            simulate_assignment(&path_table(r, &paths), &vec![0; paths.len()], tau.as_ref(), trials, seed)
        }
        (NonAdaptiveAssignment::Groups { groups, .. }, Instance::Related(r)) => {
            let (smoothed, _) = smooth_machines(r);
            if groups.iter().any(|&g| g >= smoothed.len()) || groups.len() != r.jobs.len() {
                bail!("group assignment does not match the smoothed instance");
            }
            let pol = GroupListPolicy::on_original(&smoothed, groups);
            simulate_policy(&r.choice_table(), &pol, tau.as_ref(), trials, seed)?
        }
        (_, inst) => bail!("assignment type does not fit a {} instance", inst.kind()),
    };
    print!("{}", pretty(&serde_json::to_value(&rep)?));
    Ok(0)
}
