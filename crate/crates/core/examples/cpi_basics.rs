//! CPI, delta CPI and per-instance contributors on a hand-made matrix.
//!
//! cargo run --example cpi_basics

use eohs::domain::PerformanceMatrix;
use eohs::metrics::{best_per_instance, cpi, delta_cpi, manhattan_distance};

fn main() {
    // three heuristics, four instances; lower is better
    let m = PerformanceMatrix::from_scores(&[
        vec![0.10, 0.40, 0.10, 0.40],
        vec![0.40, 0.10, 0.40, 0.10],
        vec![0.20, 0.20, 0.20, 0.20],
    ])
    .unwrap();

    for subset in [vec![0], vec![2], vec![0, 1], vec![0, 1, 2]] {
        let r = cpi(&m, &subset).unwrap();
        let owners: Vec<String> = r.contributor.iter().map(|h| h.to_string()).collect();
        println!("subset {subset:?}: cpi {:.3}, winners {owners:?}", r.cpi);
    }

    let best = best_per_instance(&m, &[2]).unwrap();
    for h in [0, 1] {
        let d = delta_cpi(&m.rows()[h], &best).unwrap();
        println!("delta of h{h} over {{h2}}: {d:.3}");
    }
    let dist = manhattan_distance(&m.rows()[0], &m.rows()[1]).unwrap();
    println!("manhattan(h0, h1) = {dist:.3}");
}
