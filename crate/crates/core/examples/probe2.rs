// Scratch debugging; removed before release.
use specalloc::admission;
use specalloc::oracle;
use specalloc::scengen::{self, ChannelSetMode, GenConfig};
use specalloc::transform;

fn main() {
    let seed = 5u64;
    let n = 4 + (seed as usize % 11);
    let cfg = GenConfig {
        user_count: n,
        channel_universe: 4 + (seed as usize % 5),
        channel_set_mode: ChannelSetMode::Uniform,
        revenue_mode: scengen::RevenueMode::MaxRevenue,
        seed: seed * 31 + 2,
        ..GenConfig::default()
    };
    let s = scengen::generate(&cfg).unwrap();
    let p = transform::build_neighbor_limited(&s, 4.0, cfg.density);
    let r = admission::solve(&p);
    let exact = oracle::solve_bqc_exact(&p, 1 << 24).unwrap();
    println!("n = {n}");
    println!("heuristic x = {:?} objective {}", r.x, r.objective);
    println!("is_feasible(heur) = {}", p.is_feasible(&r.x));
    println!("exact  x = {:?} objective {}", exact.argmax, exact.objective);
    println!("is_feasible(exact) = {}", p.is_feasible(&exact.argmax));
    println!("explored = {}", exact.explored);
    println!("forced_zero = {:?}", p.forced_zero);
    println!("revenue = {:?}", p.revenue);
    println!("capacity = {:?}", p.capacity);
    for i in 0..n {
        let row: Vec<f64> = (0..n).map(|j| p.coeff(i, j)).collect();
        println!("coeff[{i}] = {row:?}");
        println!("  lhs under heur x = {}", p.constraint_lhs(i, &r.x));
    }
}
