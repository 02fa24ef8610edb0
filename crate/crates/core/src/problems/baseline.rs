//! Deterministic reference solutions used as gap denominators for routing
//! tasks: nearest-neighbour construction polished by 2-opt.

use crate::domain::{DistanceMatrix, Payload, ProblemInstance};

use super::{eval_cvrp, tour_length, Builtin};

/// First-improvement 2-opt on a closed tour until no move improves it.
/// `tour[0]` stays in place.
pub fn two_opt(distances: &DistanceMatrix, tour: &mut [usize]) {
    let n = tour.len();
    if n < 4 {
        return;
    }
    let d = |a: usize, b: usize| distances.get(a, b);
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n - 2 {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (tour[i], tour[i + 1]);
                let (c, e) = (tour[j], tour[(j + 1) % n]);
                let delta = d(a, c) + d(b, e) - d(a, b) - d(c, e);
                if delta < -1e-12 {
                    tour[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
    }
}

/// Nearest-neighbour tour from node 0 improved to a 2-opt local optimum.
pub fn tsp_baseline_tour(distances: &DistanceMatrix) -> Vec<usize> {
    let n = distances.len();
    let mut tour = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut current = 0;
    visited[0] = true;
    tour.push(0);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&u| !visited[u])
            .min_by(|&a, &b| distances.get(current, a).total_cmp(&distances.get(current, b)).then(a.cmp(&b)))
            .expect("unvisited node remains");
        visited[next] = true;
        tour.push(next);
        current = next;
    }
    two_opt(distances, &mut tour);
    tour
}

pub fn tsp_baseline(distances: &DistanceMatrix) -> f64 {
    tour_length(distances, &tsp_baseline_tour(distances))
}

/// Nearest-feasible routes, each polished by 2-opt as a cycle through the
/// depot. Routes are returned without the depot.
pub fn cvrp_baseline_routes(payload: &Payload) -> Vec<Vec<usize>> {
    let Payload::Cvrp { depot, distances, .. } = payload else {
        return Vec::new();
    };
    // baseline of 1.0 is a placeholder; only the trace matters here
    let inst = ProblemInstance::new("baseline", payload.clone(), 1.0, crate::domain::InstanceMeta::generated())
        .expect("payload was validated by the caller");
    let res = eval_cvrp(&Builtin::CvrpNearestFeasible, &inst);
    let mut routes = Vec::new();
    let mut route = Vec::new();
    for &node in &res.trace {
        if node == *depot {
            if !route.is_empty() {
                routes.push(std::mem::take(&mut route));
            }
        } else {
            route.push(node);
        }
    }
    for route in &mut routes {
        let mut cycle = Vec::with_capacity(route.len() + 1);
        cycle.push(*depot);
        cycle.extend_from_slice(route);
        two_opt(distances, &mut cycle);
        route.copy_from_slice(&cycle[1..]);
    }
    routes
}

pub fn cvrp_baseline(payload: &Payload) -> f64 {
    let Payload::Cvrp { depot, distances, .. } = payload else {
        return f64::NAN;
    };
    cvrp_baseline_routes(payload)
        .iter()
        .map(|r| {
            let mut cycle = vec![*depot];
            cycle.extend_from_slice(r);
            tour_length(distances, &cycle)
        })
        .sum()
}
