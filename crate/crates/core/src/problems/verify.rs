use crate::domain::{Payload, ProblemInstance};

use super::{path_length, tour_length, CAPACITY_EPS};

/// Checks a solution trace against the instance and recomputes its raw
/// objective independently of the rollout evaluators.
///
/// * OBP: `trace[i]` is the bin of item `i`; bins are numbered in opening
///   order and no bin may exceed the capacity.
/// * TSP: a permutation of all nodes starting at node 0.
/// * CVRP: a node sequence that starts and ends at the depot, serves each
///   customer exactly once and never exceeds the capacity between depot
///   visits.
pub fn verify_solution(instance: &ProblemInstance, trace: &[usize]) -> Result<f64, String> {
    match instance.payload() {
        Payload::Obp { capacity, items } => {
            if trace.len() != items.len() {
                return Err(format!("{} assignments for {} items", trace.len(), items.len()));
            }
            let mut loads: Vec<f64> = Vec::new();
            for (i, (&bin, &size)) in trace.iter().zip(items).enumerate() {
                if bin > loads.len() {
                    return Err(format!("item {i} uses bin {bin} before bin {} was opened", loads.len()));
                }
                if bin == loads.len() {
                    loads.push(0.0);
                }
                loads[bin] += size;
                if loads[bin] > capacity * (1.0 + CAPACITY_EPS) {
                    return Err(format!("bin {bin} overfilled to {}", loads[bin]));
                }
            }
            Ok(loads.len() as f64)
        }
        Payload::Tsp { distances, .. } => {
            let n = distances.len();
            if trace.len() != n {
                return Err(format!("tour visits {} of {n} nodes", trace.len()));
            }
            if trace.first() != Some(&0) {
                return Err("tour does not start at node 0".into());
            }
            let mut seen = vec![false; n];
            for &v in trace {
                if v >= n {
                    return Err(format!("node {v} out of range"));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(format!("node {v} visited twice"));
                }
            }
            Ok(tour_length(distances, trace))
        }
        Payload::Cvrp {
            depot,
            demands,
            capacity,
            distances,
            ..
        } => {
            let n = distances.len();
            if trace.first() != Some(depot) || trace.last() != Some(depot) {
                return Err("route sequence must start and end at the depot".into());
            }
            let mut seen = vec![false; n];
            let mut load = 0.0;
            for &v in trace {
                if v >= n {
                    return Err(format!("node {v} out of range"));
                }
                if v == *depot {
                    load = 0.0;
                    continue;
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(format!("customer {v} served twice"));
                }
                load += demands[v];
                if load > capacity * (1.0 + CAPACITY_EPS) {
                    return Err(format!("route load {load} exceeds capacity {capacity}"));
                }
            }
            if let Some(missed) = (0..n).find(|&v| v != *depot && !seen[v]) {
                return Err(format!("customer {missed} never served"));
            }
            Ok(path_length(distances, trace))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::InstanceMeta;

    #[test]
    fn obp_checks() {
        let inst = ProblemInstance::new("o", Payload::obp(10.0, vec![6.0, 5.0, 4.0]), 2.0, InstanceMeta::generated()).unwrap();
        assert_eq!(verify_solution(&inst, &[0, 1, 0]).unwrap(), 2.0);
        assert!(verify_solution(&inst, &[0, 0, 1]).unwrap_err().contains("overfilled"));
        assert!(verify_solution(&inst, &[0, 2, 1]).unwrap_err().contains("before"));
        assert!(verify_solution(&inst, &[0, 1]).is_err());
    }

    #[test]
    fn tsp_checks() {
        let inst = ProblemInstance::new("t", Payload::tsp(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]), 1.0, InstanceMeta::generated()).unwrap();
        assert!(verify_solution(&inst, &[0, 2, 1]).is_ok());
        assert!(verify_solution(&inst, &[0, 1, 1]).unwrap_err().contains("twice"));
        assert!(verify_solution(&inst, &[1, 0, 2]).is_err());
        assert!(verify_solution(&inst, &[0, 1]).is_err());
    }

    #[test]
    fn cvrp_checks() {
        let inst = ProblemInstance::new(
            "c",
            Payload::cvrp(vec![[0.0, 0.0], [0.3, 0.4], [0.6, 0.8]], vec![0.0, 3.0, 3.0], 5.0),
            1.0,
            InstanceMeta::generated(),
        )
        .unwrap();
        assert!(verify_solution(&inst, &[0, 1, 0, 2, 0]).is_ok());
        assert!(verify_solution(&inst, &[0, 1, 2, 0]).unwrap_err().contains("capacity"));
        assert!(verify_solution(&inst, &[0, 1, 0]).unwrap_err().contains("never served"));
        assert!(verify_solution(&inst, &[0, 1, 0, 2]).is_err());
    }
}
