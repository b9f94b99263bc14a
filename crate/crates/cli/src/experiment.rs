//! Batch studies: sweeps over user counts and transform variants with
//! per-run and aggregate CSV emission.
//!
//! Every study derives its seeds from the config seed, runs trials in a
//! fixed order and writes rows in that order, so a rerun with the same
//! config reproduces the CSV files byte for byte.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use specalloc::admission;
use specalloc::bounds;
use specalloc::channel_select;
use specalloc::model::{evaluate_allocation, Scenario};
use specalloc::oracle;
use specalloc::scengen::{generate, ChannelSetMode, GenConfig, RevenueMode};
use specalloc::transform;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Studies to run; see [`ALL_STUDIES`].
    pub studies: Vec<String>,
    /// Trials per parameter point.
    pub trials: u64,
    /// Base seed; every trial derives its own seed from it.
    pub seed: u64,
    /// Candidate budget for the exact solvers.
    pub oracle_budget: u64,
    /// Largest user count for which exact-oracle columns are computed.
    pub oracle_max_users: usize,
}

pub const ALL_STUDIES: &[&str] = &[
    "maxsat",
    "maxrev",
    "satisfaction",
    "equal_sets",
    "neighbor",
    "timing",
    "bounds",
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            studies: ALL_STUDIES.iter().map(|s| s.to_string()).collect(),
            trials: 50,
            seed: 1,
            oracle_budget: oracle::DEFAULT_ORIGINAL_BUDGET,
            oracle_max_users: 12,
        }
    }
}

/// One pipeline run of a study scenario.
#[derive(Debug, Serialize)]
struct PipelineRow {
    seed: u64,
    n: usize,
    mode: String,
    objective_exact_original: Option<f64>,
    objective_exact_bqc: Option<f64>,
    objective_heuristic: f64,
    upper_bound: f64,
    admitted: usize,
    satisfied_after_selection: usize,
    revenue_realized: f64,
    converged: bool,
    t_transform_s: f64,
    t_admission_s: f64,
    t_selection_s: f64,
    t_oracle_original_s: Option<f64>,
    t_oracle_bqc_s: Option<f64>,
}

#[derive(Debug, Serialize)]
struct AggregateRow {
    study: String,
    n: usize,
    mode: String,
    trials: usize,
    mean_exact_original: Option<f64>,
    mean_exact_bqc: Option<f64>,
    mean_heuristic: f64,
    se_heuristic: f64,
    mean_upper_bound: f64,
    mean_admitted: f64,
    mean_satisfied: f64,
    mean_revenue_realized: f64,
    se_revenue_realized: f64,
}

struct PipelineOptions {
    transform: Transform,
    with_oracles: bool,
}

#[derive(Clone, Copy)]
enum Transform {
    Equal,
    Unequal,
    Neighbor(f64),
}

impl Transform {
    fn label(&self) -> String {
        match self {
            Transform::Equal => "equal".into(),
            Transform::Unequal => "unequal".into(),
            Transform::Neighbor(x) => format!("neighbor:{x}"),
        }
    }

    fn build(&self, scenario: &Scenario, density: f64) -> specalloc::BqcProblem {
        match self {
            Transform::Equal => transform::build_equal(scenario),
            Transform::Unequal => transform::build_unequal(scenario),
            Transform::Neighbor(x) => transform::build_neighbor_limited(scenario, *x, density),
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len().max(1) as f64
}

fn standard_error(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    (var / values.len() as f64).sqrt()
}

fn run_pipeline_row(
    scenario: &Scenario,
    gen: &GenConfig,
    options: &PipelineOptions,
    config: &ExperimentConfig,
    seed: u64,
    violations: &mut usize,
) -> PipelineRow {
    let n = scenario.len();
    let t0 = Instant::now();
    let problem = options.transform.build(scenario, gen.density);
    let t_transform = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let result = admission::solve(&problem);
    let t_admission = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let mut state = channel_select::init_random(scenario, &result.x, seed);
    channel_select::run(
        scenario,
        &mut state,
        channel_select::default_max_rounds(scenario),
    );
    let t_selection = t0.elapsed().as_secs_f64();
    let report = evaluate_allocation(scenario, &state.allocation);

    let mut objective_exact_original = None;
    let mut objective_exact_bqc = None;
    let mut t_oracle_original = None;
    let mut t_oracle_bqc = None;
    if options.with_oracles && n <= config.oracle_max_users {
        let t0 = Instant::now();
        if let Ok(exact) = oracle::solve_original_exact(scenario, config.oracle_budget) {
            objective_exact_original = Some(exact.objective);
            t_oracle_original = Some(t0.elapsed().as_secs_f64());
        }
        let t0 = Instant::now();
        if let Ok(exact) = oracle::solve_bqc_exact(&problem, config.oracle_budget) {
            objective_exact_bqc = Some(exact.objective);
            t_oracle_bqc = Some(t0.elapsed().as_secs_f64());
        }
    }

    let admitted = result.x.iter().filter(|&&b| b).count();
    let satisfied = report.satisfied.iter().filter(|&&b| b).count();
    if satisfied > admitted {
        eprintln!("invariant violation: satisfied {satisfied} > admitted {admitted} (seed {seed})");
        *violations += 1;
    }
    if let Some(exact) = objective_exact_bqc {
        if result.objective > exact + 1e-9 || exact > result.upper_bound + 1e-9 {
            eprintln!(
                "invariant violation: sandwich {} <= {} <= {} broken (seed {seed})",
                result.objective, exact, result.upper_bound
            );
            *violations += 1;
        }
    }

    PipelineRow {
        seed,
        n,
        mode: format!(
            "{}+{}",
            options.transform.label(),
            match gen.revenue_mode {
                RevenueMode::MaxSat => "maxsat",
                RevenueMode::MaxRevenue => "maxrev",
            }
        ),
        objective_exact_original,
        objective_exact_bqc,
        objective_heuristic: result.objective,
        upper_bound: result.upper_bound,
        admitted,
        satisfied_after_selection: satisfied,
        revenue_realized: report.revenue,
        converged: state.converged,
        t_transform_s: t_transform,
        t_admission_s: t_admission,
        t_selection_s: t_selection,
        t_oracle_original_s: t_oracle_original,
        t_oracle_bqc_s: t_oracle_bqc,
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

fn aggregate(study: &str, rows: &[PipelineRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(usize, String)> = rows
        .iter()
        .map(|r| (r.n, r.mode.clone()))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    keys.sort();
    keys.into_iter()
        .map(|(n, mode)| {
            let group: Vec<&PipelineRow> = rows
                .iter()
                .filter(|r| r.n == n && r.mode == mode)
                .collect();
            let heuristic: Vec<f64> = group.iter().map(|r| r.objective_heuristic).collect();
            let revenue: Vec<f64> = group.iter().map(|r| r.revenue_realized).collect();
            let exact_orig: Vec<f64> = group
                .iter()
                .filter_map(|r| r.objective_exact_original)
                .collect();
            let exact_bqc: Vec<f64> = group
                .iter()
                .filter_map(|r| r.objective_exact_bqc)
                .collect();
            AggregateRow {
                study: study.to_string(),
                n,
                mode,
                trials: group.len(),
                mean_exact_original: (!exact_orig.is_empty()).then(|| mean(&exact_orig)),
                mean_exact_bqc: (!exact_bqc.is_empty()).then(|| mean(&exact_bqc)),
                mean_heuristic: mean(&heuristic),
                se_heuristic: standard_error(&heuristic),
                mean_upper_bound: mean(
                    &group.iter().map(|r| r.upper_bound).collect::<Vec<_>>(),
                ),
                mean_admitted: mean(
                    &group.iter().map(|r| r.admitted as f64).collect::<Vec<_>>(),
                ),
                mean_satisfied: mean(
                    &group
                        .iter()
                        .map(|r| r.satisfied_after_selection as f64)
                        .collect::<Vec<_>>(),
                ),
                mean_revenue_realized: mean(&revenue),
                se_revenue_realized: standard_error(&revenue),
            }
        })
        .collect()
}

/// Sweep study over user counts with one transform/objective pair.
fn pipeline_study(
    config: &ExperimentConfig,
    study: &str,
    n_values: &[usize],
    gen_base: GenConfig,
    options: PipelineOptions,
    seed_offset: u64,
    out_dir: &Path,
    violations: &mut usize,
) -> Result<()> {
    let mut rows = Vec::new();
    for &n in n_values {
        for trial in 0..config.trials {
            let seed = config.seed + seed_offset + 10_000 * n as u64 + trial;
            let gen = GenConfig {
                user_count: n,
                seed,
                ..gen_base.clone()
            };
            let scenario = generate(&gen)?;
            rows.push(run_pipeline_row(
                &scenario, &gen, &options, config, seed, violations,
            ));
        }
    }
    write_csv(&out_dir.join(format!("{study}.csv")), &rows)?;
    write_csv(
        &out_dir.join(format!("{study}_agg.csv")),
        &aggregate(study, &rows),
    )?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct NeighborRow {
    seed: u64,
    n: usize,
    neighbor_count: f64,
    admitted_limited: usize,
    satisfied_limited: usize,
    admitted_full: usize,
    satisfied_full: usize,
}

#[derive(Debug, Serialize)]
struct NeighborAggRow {
    n: usize,
    neighbor_count: f64,
    trials: usize,
    satisfied_limited_total: usize,
    satisfied_full_total: usize,
    /// Satisfied users under neighbor-limited admission as a percentage of
    /// the full-knowledge baseline.
    percent_of_full: f64,
}

fn neighbor_study(
    config: &ExperimentConfig,
    out_dir: &Path,
    violations: &mut usize,
) -> Result<()> {
    let gen_base = GenConfig {
        channel_universe: 4,
        channel_set_mode: ChannelSetMode::Uniform,
        density: 1.0 / 100.0,
        pathloss_exponent: 2.0,
        ..GenConfig::default()
    };
    let mut rows = Vec::new();
    for &n in &[6usize, 20, 40, 60] {
        for &x in &[2.0f64, 4.0, 8.0] {
            for trial in 0..config.trials {
                let seed = config.seed + 700_000 + 10_000 * n as u64 + trial;
                let gen = GenConfig {
                    user_count: n,
                    seed,
                    ..gen_base.clone()
                };
                let scenario = generate(&gen)?;
                let full = run_pipeline_row(
                    &scenario,
                    &gen,
                    &PipelineOptions {
                        transform: Transform::Unequal,
                        with_oracles: false,
                    },
                    config,
                    seed,
                    violations,
                );
                let limited = run_pipeline_row(
                    &scenario,
                    &gen,
                    &PipelineOptions {
                        transform: Transform::Neighbor(x),
                        with_oracles: false,
                    },
                    config,
                    seed,
                    violations,
                );
                rows.push(NeighborRow {
                    seed,
                    n,
                    neighbor_count: x,
                    admitted_limited: limited.admitted,
                    satisfied_limited: limited.satisfied_after_selection,
                    admitted_full: full.admitted,
                    satisfied_full: full.satisfied_after_selection,
                });
            }
        }
    }
    let mut agg = Vec::new();
    for &n in &[6usize, 20, 40, 60] {
        for &x in &[2.0f64, 4.0, 8.0] {
            let group: Vec<&NeighborRow> = rows
                .iter()
                .filter(|r| r.n == n && r.neighbor_count == x)
                .collect();
            let limited: usize = group.iter().map(|r| r.satisfied_limited).sum();
            let full: usize = group.iter().map(|r| r.satisfied_full).sum();
            agg.push(NeighborAggRow {
                n,
                neighbor_count: x,
                trials: group.len(),
                satisfied_limited_total: limited,
                satisfied_full_total: full,
                percent_of_full: 100.0 * limited as f64 / full.max(1) as f64,
            });
        }
    }
    write_csv(&out_dir.join("neighbor.csv"), &rows)?;
    write_csv(&out_dir.join("neighbor_agg.csv"), &agg)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct TimingRow {
    seed: u64,
    n: usize,
    algorithm: &'static str,
    time_s: f64,
}

#[derive(Debug, Serialize)]
struct TimingAggRow {
    n: usize,
    algorithm: &'static str,
    trials: usize,
    mean_time_s: f64,
}

fn timing_study(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let mut rows = Vec::new();
    // Full stage comparison at oracle-tractable sizes.
    for &n in &[2usize, 6, 12, 18] {
        for trial in 0..config.trials.min(20) {
            let seed = config.seed + 800_000 + 10_000 * n as u64 + trial;
            let gen = GenConfig {
                user_count: n,
                channel_universe: 4,
                channel_set_mode: ChannelSetMode::Uniform,
                seed,
                ..GenConfig::default()
            };
            let scenario = generate(&gen)?;
            let problem = transform::build_unequal(&scenario);
            if n <= config.oracle_max_users {
                let t0 = Instant::now();
                if oracle::solve_original_exact(&scenario, config.oracle_budget).is_ok() {
                    rows.push(TimingRow {
                        seed,
                        n,
                        algorithm: "exact_original",
                        time_s: t0.elapsed().as_secs_f64(),
                    });
                }
                let t0 = Instant::now();
                if oracle::solve_bqc_exact(&problem, config.oracle_budget).is_ok() {
                    rows.push(TimingRow {
                        seed,
                        n,
                        algorithm: "exact_bqc",
                        time_s: t0.elapsed().as_secs_f64(),
                    });
                }
            }
            let t0 = Instant::now();
            let result = admission::solve(&problem);
            rows.push(TimingRow {
                seed,
                n,
                algorithm: "heuristic",
                time_s: t0.elapsed().as_secs_f64(),
            });
            let t0 = Instant::now();
            let mut state = channel_select::init_random(&scenario, &result.x, seed);
            channel_select::run(
                &scenario,
                &mut state,
                channel_select::default_max_rounds(&scenario),
            );
            rows.push(TimingRow {
                seed,
                n,
                algorithm: "selection",
                time_s: t0.elapsed().as_secs_f64(),
            });
        }
    }
    // Heuristic-only scaling sizes.
    for &n in &[50usize, 100, 200, 400] {
        for trial in 0..config.trials.min(5) {
            let seed = config.seed + 900_000 + 10_000 * n as u64 + trial;
            let gen = GenConfig {
                user_count: n,
                seed,
                ..GenConfig::default()
            };
            let scenario = generate(&gen)?;
            let problem = transform::build_unequal(&scenario);
            let t0 = Instant::now();
            let _ = admission::solve(&problem);
            rows.push(TimingRow {
                seed,
                n,
                algorithm: "heuristic",
                time_s: t0.elapsed().as_secs_f64(),
            });
        }
    }
    let mut agg = Vec::new();
    let mut keys: Vec<(usize, &'static str)> = rows
        .iter()
        .map(|r| (r.n, r.algorithm))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    keys.sort();
    for (n, algorithm) in keys {
        let times: Vec<f64> = rows
            .iter()
            .filter(|r| r.n == n && r.algorithm == algorithm)
            .map(|r| r.time_s)
            .collect();
        agg.push(TimingAggRow {
            n,
            algorithm,
            trials: times.len(),
            mean_time_s: mean(&times),
        });
    }
    write_csv(&out_dir.join("timing.csv"), &rows)?;
    write_csv(&out_dir.join("timing_agg.csv"), &agg)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct BoundsRow {
    seed: u64,
    n: usize,
    k: usize,
    sufficient_count: usize,
    necessary_count: usize,
    constant: f64,
    gap_lhs: f64,
    opt_exact: f64,
    opt_transformed: f64,
    gap_holds: bool,
    gap_holds_alt: bool,
    set_bound_holds: bool,
}

fn bounds_study(
    config: &ExperimentConfig,
    out_dir: &Path,
    violations: &mut usize,
) -> Result<()> {
    let mut rows = Vec::new();
    for &n in &[4usize, 6, 8] {
        for &k in &[2usize, 3, 4] {
            for trial in 0..config.trials.min(20) {
                let seed = config.seed + 600_000 + 10_000 * (n * 10 + k) as u64 + trial;
                let gen = GenConfig {
                    user_count: n,
                    channel_universe: k,
                    channel_set_mode: ChannelSetMode::Equal,
                    density: 1.0 / 100.0,
                    sinr_targets_db: vec![6.0],
                    seed,
                    ..GenConfig::default()
                };
                let scenario = generate(&gen)?;
                let report = bounds::approx_gap_check(&scenario, 4.0, config.oracle_budget)
                    .map_err(|e| anyhow::anyhow!("bounds check failed: {e}"))?;
                if !report.gap_holds || !report.set_bound_holds {
                    eprintln!("invariant violation: bound report {report:?} (seed {seed})");
                    *violations += 1;
                }
                rows.push(BoundsRow {
                    seed,
                    n,
                    k,
                    sufficient_count: report.sufficient_count,
                    necessary_count: report.necessary_count,
                    constant: report.constant,
                    gap_lhs: report.gap_lhs,
                    opt_exact: report.opt_exact,
                    opt_transformed: report.opt_transformed,
                    gap_holds: report.gap_holds,
                    gap_holds_alt: report.gap_holds_alt,
                    set_bound_holds: report.set_bound_holds,
                });
            }
        }
    }
    write_csv(&out_dir.join("bounds.csv"), &rows)?;
    Ok(())
}

/// Runs the configured studies; returns the number of invariant
/// violations observed in the rows.
pub fn run_all(config: &ExperimentConfig, out_dir: &Path) -> Result<usize> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let mut violations = 0usize;
    for study in &config.studies {
        match study.as_str() {
            "maxsat" => pipeline_study(
                config,
                "maxsat",
                &[2, 4, 6, 8, 10, 12, 14, 16, 18],
                GenConfig::default(),
                PipelineOptions {
                    transform: Transform::Unequal,
                    with_oracles: true,
                },
                100_000,
                out_dir,
                &mut violations,
            )?,
            "maxrev" => pipeline_study(
                config,
                "maxrev",
                &[2, 4, 6, 8, 10, 12, 14, 16, 18],
                GenConfig {
                    revenue_mode: RevenueMode::MaxRevenue,
                    ..GenConfig::default()
                },
                PipelineOptions {
                    transform: Transform::Unequal,
                    with_oracles: true,
                },
                200_000,
                out_dir,
                &mut violations,
            )?,
            "satisfaction" => pipeline_study(
                config,
                "satisfaction",
                &[5, 10, 15, 20, 25, 30],
                GenConfig::default(),
                PipelineOptions {
                    transform: Transform::Unequal,
                    with_oracles: false,
                },
                300_000,
                out_dir,
                &mut violations,
            )?,
            "equal_sets" => {
                // Worst-case and set-aware transforms on the same
                // equal-set scenarios (the coefficients coincide there;
                // kept as two modes for the record).
                for (offset, transform_kind) in
                    [(400_000u64, Transform::Equal), (450_000, Transform::Unequal)]
                {
                    pipeline_study(
                        config,
                        if matches!(transform_kind, Transform::Equal) {
                            "equal_sets_worstcase"
                        } else {
                            "equal_sets_setaware"
                        },
                        &[4, 6, 8, 10, 12, 14, 16],
                        GenConfig {
                            channel_universe: 5,
                            channel_set_mode: ChannelSetMode::Equal,
                            density: 1.0 / 100.0,
                            ..GenConfig::default()
                        },
                        PipelineOptions {
                            transform: transform_kind,
                            with_oracles: true,
                        },
                        offset,
                        out_dir,
                        &mut violations,
                    )?;
                }
            }
            "neighbor" => neighbor_study(config, out_dir, &mut violations)?,
            "timing" => timing_study(config, out_dir)?,
            "bounds" => bounds_study(config, out_dir, &mut violations)?,
            other => eprintln!("warning: unknown study {other:?} skipped"),
        }
    }
    Ok(violations)
}
