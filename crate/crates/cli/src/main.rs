//! Command-line front end: scenario generation, single-scenario solves,
//! invariant verification and batch experiments.
//!
//! Exit codes: 0 on success, 1 on usage/input errors, 2 when an invariant
//! check fails.

mod experiment;

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use specalloc::admission;
use specalloc::channel_select;
use specalloc::model::{evaluate_allocation, Scenario};
use specalloc::oracle;
use specalloc::scengen::{self, GenConfig};
use specalloc::transform;

#[derive(Parser)]
#[command(
    name = "specalloc",
    about = "SINR-constrained spectrum admission and channel allocation simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random scenario and emit its JSON.
    Gen(GenArgs),
    /// Run the admission + channel-selection pipeline on a scenario file.
    Solve(SolveArgs),
    /// Run the invariant suite against a scenario file.
    Verify(VerifyArgs),
    /// Run batch studies and emit per-run and aggregate CSV files.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Generator config JSON file; defaults apply for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of users (overrides the config file).
    #[arg(long)]
    users: Option<usize>,
    /// RNG seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Channel universe size (overrides the config file).
    #[arg(long)]
    channels: Option<usize>,
    /// Channel set mode: equal | uniform.
    #[arg(long)]
    channel_mode: Option<String>,
    /// Revenue objective: maxsat | maxrev.
    #[arg(long)]
    objective: Option<Objective>,
    /// User density in users per square meter.
    #[arg(long)]
    density: Option<f64>,
    /// Pathloss exponent.
    #[arg(long)]
    alpha: Option<f64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Admission constraint variant.
    #[arg(long, default_value = "unequal")]
    transform: TransformMode,
    /// Density used to size the neighbor radius (neighbor transform only).
    #[arg(long, default_value_t = 1.0 / 800.0)]
    density: f64,
    /// Seed for the random initial channel draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit per-iteration and per-move traces as JSON lines on stderr.
    #[arg(long)]
    trace: bool,
    /// Exhaustively verify that the admitted set has a satisfying
    /// assignment.
    #[arg(long)]
    check_sufficiency: bool,
    /// Candidate budget for exhaustive checks.
    #[arg(long, default_value_t = oracle::DEFAULT_ORIGINAL_BUDGET)]
    oracle_budget: u64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Seed for sampled allocations and pipeline runs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Candidate budget for exhaustive checks.
    #[arg(long, default_value_t = oracle::DEFAULT_ORIGINAL_BUDGET)]
    oracle_budget: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config JSON file; defaults run every study.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the emitted CSV files.
    #[arg(long, default_value = "experiments")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Objective {
    Maxsat,
    Maxrev,
}

/// Admission transform selector: `equal`, `unequal` or `neighbor:<x>`.
#[derive(Clone, Copy, PartialEq)]
enum TransformMode {
    Equal,
    Unequal,
    Neighbor(f64),
}

impl FromStr for TransformMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "equal" => Ok(TransformMode::Equal),
            "unequal" => Ok(TransformMode::Unequal),
            other => match other.strip_prefix("neighbor:") {
                Some(count) => count
                    .parse::<f64>()
                    .map_err(|e| format!("bad neighbor count {count:?}: {e}"))
                    .and_then(|x| {
                        if x >= 0.0 {
                            Ok(TransformMode::Neighbor(x))
                        } else {
                            Err("neighbor count must be nonnegative".into())
                        }
                    }),
                None => Err(format!(
                    "unknown transform {other:?}; expected equal, unequal or neighbor:<x>"
                )),
            },
        }
    }
}

impl fmt::Display for TransformMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformMode::Equal => write!(f, "equal"),
            TransformMode::Unequal => write!(f, "unequal"),
            TransformMode::Neighbor(x) => write!(f, "neighbor:{x}"),
        }
    }
}

impl TransformMode {
    fn build(&self, scenario: &Scenario, density: f64) -> specalloc::BqcProblem {
        match self {
            TransformMode::Equal => transform::build_equal(scenario),
            TransformMode::Unequal => transform::build_unequal(scenario),
            TransformMode::Neighbor(x) => {
                transform::build_neighbor_limited(scenario, *x, density)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Experiment(args) => cmd_experiment(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_scenario(path: &PathBuf) -> Result<Scenario> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading scenario file {}", path.display()))?;
    Scenario::from_json(&text).map_err(|e| anyhow!("parsing {}: {e}", path.display()))
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            GenConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => GenConfig::default(),
    };
    if let Some(n) = args.users {
        config.user_count = n;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(k) = args.channels {
        config.channel_universe = k;
    }
    if let Some(mode) = &args.channel_mode {
        config.channel_set_mode = match mode.as_str() {
            "equal" => scengen::ChannelSetMode::Equal,
            "uniform" => scengen::ChannelSetMode::Uniform,
            other => return Err(anyhow!("unknown channel mode {other:?}")),
        };
    }
    if let Some(objective) = args.objective {
        config.revenue_mode = match objective {
            Objective::Maxsat => scengen::RevenueMode::MaxSat,
            Objective::Maxrev => scengen::RevenueMode::MaxRevenue,
        };
    }
    if let Some(density) = args.density {
        config.density = density;
    }
    if let Some(alpha) = args.alpha {
        config.pathloss_exponent = alpha;
    }
    let scenario = scengen::generate(&config)?;
    let text = scenario.to_json();
    match &args.out {
        Some(path) => fs::write(path, text.as_bytes())
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SolveOutput {
    transform: String,
    admission: admission::AdmissionResult,
    allocation: specalloc::Allocation,
    selection: SelectionSummary,
    satisfaction: SatisfactionSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    sufficiency: Option<SufficiencySummary>,
}

#[derive(Serialize)]
struct SelectionSummary {
    potential: f64,
    rounds: usize,
    converged: bool,
}

#[derive(Serialize)]
struct SatisfactionSummary {
    successful: bool,
    admitted_count: usize,
    satisfied_count: usize,
    satisfied: Vec<bool>,
    revenue_realized: f64,
}

#[derive(Serialize)]
struct SufficiencySummary {
    realizable: bool,
    candidates: u64,
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode> {
    let scenario = load_scenario(&args.scenario)?;
    let problem = args.transform.build(&scenario, args.density);
    for (i, &forced) in problem.forced_zero.iter().enumerate() {
        if forced {
            eprintln!("warning: user {i} cannot meet its SINR target even alone; forced out");
        }
    }

    let (result, events) = admission::solve_traced(&problem);
    if args.trace {
        for event in &events {
            eprintln!("{}", serde_json::to_string(event)?);
        }
    }

    let mut state = channel_select::init_random(&scenario, &result.x, args.seed);
    let max_rounds = channel_select::default_max_rounds(&scenario);
    if args.trace {
        for event in channel_select::run_traced(&scenario, &mut state, max_rounds) {
            eprintln!("{}", serde_json::to_string(&event)?);
        }
    } else {
        channel_select::run(&scenario, &mut state, max_rounds);
    }

    let report = evaluate_allocation(&scenario, &state.allocation);
    let mut violation = false;
    let sufficiency = if args.check_sufficiency {
        let assignment =
            oracle::find_successful_assignment(&scenario, &result.x, args.oracle_budget)?;
        let realizable = assignment.is_some();
        if args.transform == TransformMode::Equal && !realizable {
            eprintln!("invariant violation: worst-case admissions must be realizable");
            violation = true;
        }
        Some(SufficiencySummary {
            realizable,
            candidates: oracle::candidate_count_assignment(&scenario, &result.x)
                .min(u64::MAX as u128) as u64,
        })
    } else {
        None
    };

    let output = SolveOutput {
        transform: args.transform.to_string(),
        satisfaction: SatisfactionSummary {
            successful: report.successful,
            admitted_count: result.x.iter().filter(|&&b| b).count(),
            satisfied_count: report.satisfied.iter().filter(|&&b| b).count(),
            satisfied: report.satisfied,
            revenue_realized: report.revenue,
        },
        selection: SelectionSummary {
            potential: state.potential,
            rounds: state.round,
            converged: state.converged,
        },
        allocation: state.allocation,
        admission: result,
    };
    println!("{}", serde_json::to_string_pretty(&output)?);
    Ok(if violation {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let scenario = load_scenario(&args.scenario)?;
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool, detail: String| {
        if ok {
            println!("ok: {name} {detail}");
        } else {
            println!("VIOLATION: {name} {detail}");
            failures += 1;
        }
    };

    // Target-vs-budget equivalence on sampled allocations: a user meets
    // its SINR target exactly when its accumulated interference stays
    // within its derived budget.
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(args.seed);
    let links = specalloc::model::derive_links(&scenario);
    let n = scenario.len();
    let mut equivalence_ok = true;
    let mut blocked_ok = true;
    for _ in 0..200 {
        let channels: Vec<Option<usize>> = (0..n)
            .map(|i| {
                if rng.random_bool(0.7) {
                    let set = &scenario.users[i].channel_set;
                    Some(set[rng.random_range(0..set.len())])
                } else {
                    None
                }
            })
            .collect();
        let allocation = specalloc::Allocation::new(&scenario, channels).expect("sampled in-set");
        for i in 0..n {
            if let Some(k) = allocation.channel_of(i) {
                let omega = specalloc::model::co_channel_interference(&scenario, &allocation, i, k);
                let sinr = specalloc::model::compute_sinr(&scenario, &allocation, i).unwrap();
                let meets = sinr >= scenario.users[i].sinr_target;
                let within = omega <= links.max_interference[i];
                let margin = (omega - links.max_interference[i]).abs();
                if meets != within && margin > 1e-12 * links.max_interference[i].abs() {
                    equivalence_ok = false;
                }
            }
            if links.is_infeasible_alone(i) {
                continue;
            }
            let blocked = scenario.users[i]
                .channel_set
                .iter()
                .filter(|&&k| {
                    specalloc::model::co_channel_interference(&scenario, &allocation, i, k)
                        > links.max_interference[i]
                })
                .count();
            let budget: f64 = (0..n)
                .filter(|&j| j != i && allocation.channel_of(j).is_some())
                .map(|j| links.clamped_cross(j, i) / links.max_interference[i])
                .sum();
            if blocked as f64 >= budget + 1.0 {
                blocked_ok = false;
            }
        }
    }
    check("sinr-budget equivalence", equivalence_ok, "(200 sampled allocations)".into());
    check("blocked-channel bound", blocked_ok, "(200 sampled allocations)".into());

    for (label, problem) in [
        ("equal", transform::build_equal(&scenario)),
        ("unequal", transform::build_unequal(&scenario)),
    ] {
        let result = admission::solve(&problem);
        check(
            &format!("admission feasibility ({label})"),
            problem.is_feasible(&result.x),
            format!("(objective {})", result.objective),
        );
        check(
            &format!("bound dominates objective ({label})"),
            result.objective <= result.upper_bound + 1e-9,
            format!("({} <= {})", result.objective, result.upper_bound),
        );
        if n <= 24 {
            match oracle::solve_bqc_exact(&problem, args.oracle_budget) {
                Ok(exact) => {
                    check(
                        &format!("sandwich ({label})"),
                        result.objective <= exact.objective + 1e-9
                            && exact.objective <= result.upper_bound + 1e-9,
                        format!(
                            "({} <= {} <= {})",
                            result.objective, exact.objective, result.upper_bound
                        ),
                    );
                }
                Err(e) => println!("skip: sandwich ({label}) {e}"),
            }
        }
    }

    let equal_problem = transform::build_equal(&scenario);
    let admitted = admission::solve(&equal_problem).x;
    match oracle::find_successful_assignment(&scenario, &admitted, args.oracle_budget) {
        Ok(assignment) => check(
            "worst-case admissions realizable",
            assignment.is_some(),
            format!(
                "({} admitted)",
                admitted.iter().filter(|&&b| b).count()
            ),
        ),
        Err(e) => println!("skip: realizability {e}"),
    }

    // Pipeline determinism under a fixed seed.
    let problem = transform::build_unequal(&scenario);
    let run = |seed: u64| {
        let result = admission::solve(&problem);
        let mut state = channel_select::init_random(&scenario, &result.x, seed);
        channel_select::run(
            &scenario,
            &mut state,
            channel_select::default_max_rounds(&scenario),
        );
        serde_json::to_string(&state.allocation).unwrap()
    };
    check(
        "pipeline determinism",
        run(args.seed) == run(args.seed),
        "(double run)".into(),
    );

    if failures == 0 {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{failures} check(s) failed");
        Ok(ExitCode::from(2))
    }
}

fn cmd_experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => experiment::ExperimentConfig::default(),
    };
    let started = Instant::now();
    let violations = experiment::run_all(&config, &args.out_dir)?;
    eprintln!(
        "experiments finished in {:.1} s, output in {}",
        started.elapsed().as_secs_f64(),
        args.out_dir.display()
    );
    Ok(if violations == 0 {
        ExitCode::SUCCESS
    } else {
        eprintln!("{violations} invariant violation(s) in experiment rows");
        ExitCode::from(2)
    })
}
