//! Greedy set selection against the exhaustive optimum on random pools.
//!
//! cargo run --release --example greedy_guarantee -- [trials] [k]

use eohs::domain::PerformanceMatrix;
use eohs::selection::{greedy_coefficient, verify_theorem3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut args = std::env::args().skip(1);
    let trials: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let k: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut held, mut optimal, mut worst) = (0, 0, f64::INFINITY);
    for _ in 0..trials {
        let rows: Vec<Vec<f64>> = (0..8).map(|_| (0..10).map(|_| rng.random()).collect()).collect();
        let m = PerformanceMatrix::from_scores(&rows).unwrap();
        let r = verify_theorem3(&m, &(0..8).collect::<Vec<_>>(), k).unwrap();
        held += r.bound_ok as usize;
        optimal += r.greedy_is_optimal() as usize;
        if r.f_h1 > r.f_opt {
            worst = worst.min((r.f_h1 - r.f_ga) / (r.f_h1 - r.f_opt));
        }
    }
    println!("k = {k}, coefficient {:.4}", greedy_coefficient(k));
    println!("bound held in {held}/{trials} pools");
    println!("greedy optimal in {optimal}/{trials} pools");
    println!("worst achieved fraction of the optimal improvement: {worst:.4}");
}
