//! First Fit and Best Fit on the Weibull training distribution, grouped by
//! item count, against both lower bounds.
//!
//! cargo run --release --example obp_baselines -- [seed]

use eohs::domain::{Payload, Task};
use eohs::instances::{generate, GeneratorSpec};
use eohs::problems::{evaluate, Builtin, ObpBound};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let groups = [(200, 500), (501, 1000), (1001, 2000)];
    for bound in [ObpBound::L1, ObpBound::MartelloToth] {
        let mut spec = GeneratorSpec::training(Task::Obp, seed);
        spec.obp.bound = bound;
        let instances = generate(&spec).expect("default spec is valid");
        println!("bound {bound:?}");
        println!("{:<14} {:>10} {:>10} {:>10} {:>10}", "heuristic", "200-500", "500-1k", "1k-2k", "all");
        for b in [Builtin::FirstFit, Builtin::BestFit] {
            let mut sums = [0.0; 3];
            let mut counts = [0usize; 3];
            for inst in &instances {
                let Payload::Obp { items, .. } = inst.payload() else { unreachable!() };
                let g = groups.iter().position(|&(lo, hi)| (lo..=hi).contains(&items.len())).expect("size in range");
                sums[g] += evaluate(&b, inst).gap;
                counts[g] += 1;
            }
            let means: Vec<String> = (0..3).map(|g| format!("{:.4}", sums[g] / counts[g].max(1) as f64)).collect();
            let all = sums.iter().sum::<f64>() / instances.len() as f64;
            println!("{:<14} {:>10} {:>10} {:>10} {:>10.4}", b.name(), means[0], means[1], means[2], all);
        }
        println!();
    }
}
