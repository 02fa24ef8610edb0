//! Exhaustive optima for tiny instances. Exponential; guarded by size.

use crate::domain::{DistanceMatrix, Payload, ProblemInstance};

pub const MAX_ORACLE_ITEMS: usize = 14;
pub const MAX_ORACLE_TOUR: usize = 10;
pub const MAX_ORACLE_CUSTOMERS: usize = 8;

/// Minimum number of bins for an offline packing, by branch and bound.
pub fn optimal_bins(capacity: f64, items: &[f64]) -> usize {
    assert!(items.len() <= MAX_ORACLE_ITEMS, "too many items for exhaustive packing");
    let mut sorted = items.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut best = sorted.len();
    let mut loads = Vec::new();
    fn search(items: &[f64], capacity: f64, loads: &mut Vec<f64>, best: &mut usize) {
        if loads.len() >= *best {
            return;
        }
        let Some((&item, rest)) = items.split_first() else {
            *best = loads.len();
            return;
        };
        for b in 0..loads.len() {
            if loads[b] + item <= capacity + 1e-9 {
                loads[b] += item;
                search(rest, capacity, loads, best);
                loads[b] -= item;
            }
        }
        loads.push(item);
        search(rest, capacity, loads, best);
        loads.pop();
    }
    search(&sorted, capacity, &mut loads, &mut best);
    best
}

/// Shortest Hamiltonian cycle by Held–Karp dynamic programming.
pub fn optimal_tour(distances: &DistanceMatrix) -> f64 {
    let n = distances.len();
    assert!(n <= MAX_ORACLE_TOUR + 6, "too many nodes for exhaustive tour");
    if n < 2 {
        return 0.0;
    }
    cycle_through(distances, 0, &(1..n).collect::<Vec<_>>())
}

/// Shortest cycle from `start` through every node in `others`.
fn cycle_through(distances: &DistanceMatrix, start: usize, others: &[usize]) -> f64 {
    let k = others.len();
    if k == 0 {
        return 0.0;
    }
    let full = 1usize << k;
    let mut dp = vec![f64::INFINITY; full * k];
    for (i, &v) in others.iter().enumerate() {
        dp[(1 << i) * k + i] = distances.get(start, v);
    }
    for mask in 1..full {
        for last in 0..k {
            let cur = dp[mask * k + last];
            if mask & (1 << last) == 0 || !cur.is_finite() {
                continue;
            }
            for next in 0..k {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let nm = mask | (1 << next);
                let cand = cur + distances.get(others[last], others[next]);
                if cand < dp[nm * k + next] {
                    dp[nm * k + next] = cand;
                }
            }
        }
    }
    (0..k)
        .map(|last| dp[(full - 1) * k + last] + distances.get(others[last], start))
        .fold(f64::INFINITY, f64::min)
}

/// Optimal CVRP distance: best partition of the customers into
/// capacity-feasible routes, each routed optimally.
pub fn optimal_cvrp(instance: &ProblemInstance) -> Option<f64> {
    let Payload::Cvrp {
        depot,
        demands,
        capacity,
        distances,
        ..
    } = instance.payload()
    else {
        return None;
    };
    let customers: Vec<usize> = (0..distances.len()).filter(|v| v != depot).collect();
    let k = customers.len();
    assert!(k <= MAX_ORACLE_CUSTOMERS, "too many customers for exhaustive routing");
    let full = 1usize << k;
    let mut route_cost = vec![f64::INFINITY; full];
    for (mask, cost) in route_cost.iter_mut().enumerate().skip(1) {
        let members: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| customers[i]).collect();
        let load: f64 = members.iter().map(|&c| demands[c]).sum();
        if load <= capacity + 1e-9 {
            *cost = cycle_through(distances, *depot, &members);
        }
    }
    let mut best = vec![f64::INFINITY; full];
    best[0] = 0.0;
    for mask in 1..full {
        let low = mask & mask.wrapping_neg();
        // enumerate sub-masks containing the lowest customer
        let mut sub = mask;
        while sub > 0 {
            if sub & low != 0 && route_cost[sub].is_finite() {
                let cand = route_cost[sub] + best[mask ^ sub];
                if cand < best[mask] {
                    best[mask] = cand;
                }
            }
            sub = (sub - 1) & mask;
        }
    }
    Some(best[full - 1])
}
