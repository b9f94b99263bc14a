// Scratch calibration runs; removed before release.
use specalloc::admission;
use specalloc::channel_select;
use specalloc::model::evaluate_allocation;
use specalloc::oracle;
use specalloc::scengen::{self, ChannelSetMode, GenConfig};
use specalloc::transform;

fn pipeline_realized(
    scenario: &specalloc::Scenario,
    problem: &specalloc::BqcProblem,
    seed: u64,
) -> (usize, usize, f64, bool) {
    let result = admission::solve(problem);
    let admitted_count = result.x.iter().filter(|&&b| b).count();
    let mut state = channel_select::init_random(scenario, &result.x, seed);
    channel_select::run(scenario, &mut state, channel_select::default_max_rounds(scenario));
    let report = evaluate_allocation(scenario, &state.allocation);
    let satisfied = report.satisfied.iter().filter(|&&b| b).count();
    (admitted_count, satisfied, report.revenue, state.converged)
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();

    if which == "sandwich" || which.is_empty() {
        // Criterion 2 probe: 1500 instances, mixed sources.
        let mut failures = 0;
        let mut checked = 0;
        for seed in 0..500u64 {
            for (mode, variant) in [
                (ChannelSetMode::Equal, 0),
                (ChannelSetMode::Uniform, 1),
                (ChannelSetMode::Uniform, 2),
            ] {
                let n = 4 + (seed as usize % 11); // 4..14
                let cfg = GenConfig {
                    user_count: n,
                    channel_universe: 4 + (seed as usize % 5),
                    channel_set_mode: mode,
                    revenue_mode: if seed % 2 == 0 {
                        scengen::RevenueMode::MaxSat
                    } else {
                        scengen::RevenueMode::MaxRevenue
                    },
                    seed: seed * 31 + variant,
                    ..GenConfig::default()
                };
                let s = scengen::generate(&cfg).unwrap();
                let p = match variant {
                    0 => transform::build_equal(&s),
                    1 => transform::build_unequal(&s),
                    _ => transform::build_neighbor_limited(&s, 4.0, cfg.density),
                };
                let r = admission::solve(&p);
                let exact = oracle::solve_bqc_exact(&p, 1 << 24).unwrap();
                checked += 1;
                if !(r.objective <= exact.objective + 1e-9
                    && exact.objective <= r.upper_bound + 1e-9)
                {
                    failures += 1;
                    println!(
                        "FAIL seed={seed} variant={variant} heur={} exact={} ub={}",
                        r.objective, exact.objective, r.upper_bound
                    );
                }
            }
        }
        println!("sandwich: {checked} checked, {failures} failures");
    }

    if which == "quality" || which.is_empty() {
        // Criterion 3 probe.
        let mut gaps = Vec::new();
        for seed in 0..200u64 {
            let n = 6 + (seed as usize % 5); // 6..10
            let cfg = GenConfig {
                user_count: n,
                channel_universe: 4,
                channel_set_mode: ChannelSetMode::Uniform,
                seed: 7000 + seed,
                ..GenConfig::default()
            };
            let s = scengen::generate(&cfg).unwrap();
            let p = transform::build_unequal(&s);
            let (_adm, _sat, revenue, _c) = pipeline_realized(&s, &p, seed);
            let exact = oracle::solve_original_exact(&s, 100_000_000).unwrap();
            if exact.objective > 0.0 {
                gaps.push((exact.objective - revenue) / exact.objective);
            }
        }
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        println!("quality: mean gap {:.4} over {} instances", mean, gaps.len());
    }

    if which == "satisfaction" || which.is_empty() {
        // Criterion 4 probe.
        let mut gap_plain = Vec::new();
        let mut gap_sym = Vec::new();
        let mut sym_failures = 0;
        for seed in 0..200u64 {
            let n = 6 + (seed as usize % 15); // 6..20
            let cfg = GenConfig {
                user_count: n,
                seed: 9000 + seed,
                ..GenConfig::default()
            };
            let s = scengen::generate(&cfg).unwrap();
            let p = transform::build_unequal(&s);
            let (adm, sat, _rev, _c) = pipeline_realized(&s, &p, seed);
            if adm > 0 {
                gap_plain.push((adm - sat) as f64 / adm as f64);
            }
            let sym = s.symmetrized();
            let ps = transform::build_unequal(&sym);
            let (adm_s, sat_s, _rev_s, conv) = pipeline_realized(&sym, &ps, seed);
            if adm_s > 0 {
                gap_sym.push((adm_s - sat_s) as f64 / adm_s as f64);
                if sat_s != adm_s {
                    sym_failures += 1;
                    println!("  sym gap at seed {seed}: admitted {adm_s} satisfied {sat_s} converged {conv}");
                }
            }
        }
        println!(
            "satisfaction: plain mean {:.4}, sym mean {:.6}, sym failures {}",
            gap_plain.iter().sum::<f64>() / gap_plain.len() as f64,
            gap_sym.iter().sum::<f64>() / gap_sym.len() as f64,
            sym_failures
        );
    }

    if which == "equalsets" || which.is_empty() {
        // Criterion 9 probe: equal sets K=5.
        let alpha: f64 = std::env::args()
            .nth(2)
            .and_then(|a| a.parse().ok())
            .unwrap_or(4.0);
        let density: f64 = std::env::args()
            .nth(3)
            .and_then(|a| a.parse().ok())
            .unwrap_or(1.0 / 800.0);
        let mut greedy_failures = 0;
        let mut runs = 0;
        let mut assignable = 0;
        let t0 = std::time::Instant::now();
        for seed in 0..480u64 {
            let n = 12 + 2 * (seed as usize % 4); // 12..18
            let cfg = GenConfig {
                user_count: n,
                channel_universe: 5,
                channel_set_mode: ChannelSetMode::Equal,
                pathloss_exponent: alpha,
                density,
                seed: 11000 + seed,
                ..GenConfig::default()
            };
            let s = scengen::generate(&cfg).unwrap();
            let p = transform::build_unequal(&s);
            let (adm, sat, _rev, _c) = pipeline_realized(&s, &p, seed);
            runs += 1;
            if sat < adm {
                greedy_failures += 1;
            }
            // Equal transform: exhaustive realizability.
            let pe = transform::build_equal(&s);
            let r = admission::solve(&pe);
            let found = oracle::find_successful_assignment(&s, &r.x, u64::MAX)
                .unwrap()
                .is_some();
            if found {
                assignable += 1;
            }
        }
        println!(
            "equalsets(alpha {alpha}): {runs} runs, greedy failures {greedy_failures}, \
             equal-assignable {assignable}, {:?}",
            t0.elapsed()
        );
    }

    if which == "neighbor" || which.is_empty() {
        // Criterion 10 probe.
        let alpha: f64 = std::env::args()
            .nth(2)
            .and_then(|a| a.parse().ok())
            .unwrap_or(4.0);
        let density: f64 = std::env::args()
            .nth(3)
            .and_then(|a| a.parse().ok())
            .unwrap_or(1.0 / 800.0);
        let universe: usize = std::env::args()
            .nth(4)
            .and_then(|a| a.parse().ok())
            .unwrap_or(10);
        for n in [4usize, 6, 8, 20, 30, 40, 60] {
            for x in [2.0f64, 4.0, 6.0] {
                let mut full_sat = 0usize;
                let mut lim_sat = 0usize;
                for seed in 0..50u64 {
                    let cfg = GenConfig {
                        user_count: n,
                        pathloss_exponent: alpha,
                        density,
                        channel_universe: universe,
                        seed: 13000 + seed * 7 + n as u64,
                        ..GenConfig::default()
                    };
                    let s = scengen::generate(&cfg).unwrap();
                    let pf = transform::build_unequal(&s);
                    let (_a1, s1, _r1, _c1) = pipeline_realized(&s, &pf, seed);
                    let pl = transform::build_neighbor_limited(&s, x, cfg.density);
                    let (_a2, s2, _r2, _c2) = pipeline_realized(&s, &pl, seed);
                    full_sat += s1;
                    lim_sat += s2;
                }
                println!(
                    "neighbor: n={n} x={x}: limited/full = {}/{} = {:.3}",
                    lim_sat,
                    full_sat,
                    lim_sat as f64 / full_sat as f64
                );
            }
        }
    }
}
