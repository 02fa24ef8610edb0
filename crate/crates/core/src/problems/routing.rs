use crate::domain::{Payload, ProblemInstance};

use super::{path_length, tour_length, Decider, Decision, DecisionQuery, EpisodeResult, CAPACITY_EPS};

fn node_choice(decision: Result<Decision, super::DecisionError>, decisions: usize) -> Result<i64, EpisodeResult> {
    match decision {
        Ok(Decision::Node(n)) => Ok(n),
        Ok(Decision::Priorities(_)) => Err(EpisodeResult::failed("expected a node id, got priorities", decisions)),
        Err(e) => Err(EpisodeResult::failed(format!("heuristic error: {e}"), decisions)),
    }
}

/// Step-by-step tour construction from node 0, returning to node 0.
pub fn eval_tsp<D: Decider + ?Sized>(decider: &D, instance: &ProblemInstance) -> EpisodeResult {
    let Payload::Tsp { distances, .. } = instance.payload() else {
        return EpisodeResult::failed("not a tsp instance", 0);
    };
    let n = distances.len();
    let start = 0;
    let mut unvisited: Vec<usize> = (1..n).collect();
    let mut trace = Vec::with_capacity(n);
    trace.push(start);
    let mut current = start;
    let mut decisions = 0;
    while !unvisited.is_empty() {
        decisions += 1;
        let query = DecisionQuery::Tsp {
            current,
            destination: start,
            unvisited: &unvisited,
            distances,
        };
        let node = match node_choice(decider.decide(&query), decisions) {
            Ok(n) => n,
            Err(fail) => return fail,
        };
        let Some(pos) = usize::try_from(node)
            .ok()
            .and_then(|node| unvisited.iter().position(|&u| u == node))
        else {
            let reason = if node < 0 || node as usize >= n {
                format!("node {node} out of range")
            } else {
                format!("node {node} already visited")
            };
            return EpisodeResult::failed(reason, decisions);
        };
        current = unvisited.remove(pos);
        trace.push(current);
    }
    let raw = tour_length(distances, &trace);
    EpisodeResult {
        raw,
        gap: instance.gap(raw),
        decisions,
        violation: None,
        trace,
        detours: 0,
    }
}

/// Step-by-step route construction for a single vehicle that returns to the
/// depot to reload.
///
/// The decider may name the depot (or any negative id) to end the current
/// route. Naming a customer whose demand exceeds the remaining load sends
/// the vehicle through the depot first; this is counted in `detours`.
pub fn eval_cvrp<D: Decider + ?Sized>(decider: &D, instance: &ProblemInstance) -> EpisodeResult {
    let Payload::Cvrp {
        depot,
        demands,
        capacity,
        distances,
        ..
    } = instance.payload()
    else {
        return EpisodeResult::failed("not a cvrp instance", 0);
    };
    let (depot, capacity) = (*depot, *capacity);
    let eps = CAPACITY_EPS * capacity;
    let n = distances.len();
    let mut unvisited: Vec<usize> = (0..n).filter(|&i| i != depot).collect();
    let mut trace = vec![depot];
    let mut current = depot;
    let mut rest = capacity;
    let mut decisions = 0;
    let mut detours = 0;

    while !unvisited.is_empty() {
        decisions += 1;
        let query = DecisionQuery::Cvrp {
            current,
            depot,
            unvisited: &unvisited,
            rest_capacity: rest,
            demands,
            distances,
        };
        let node = match node_choice(decider.decide(&query), decisions) {
            Ok(n) => n,
            Err(fail) => return fail,
        };
        if node < 0 || node as usize == depot {
            if current == depot {
                return EpisodeResult::failed("returned to the depot without serving anyone", decisions);
            }
            trace.push(depot);
            current = depot;
            rest = capacity;
            continue;
        }
        let node = node as usize;
        if node >= n {
            return EpisodeResult::failed(format!("node {node} out of range"), decisions);
        }
        let Some(pos) = unvisited.iter().position(|&u| u == node) else {
            return EpisodeResult::failed(format!("node {node} already visited"), decisions);
        };
        if demands[node] > rest + eps {
            // current != depot here: a full vehicle can serve any customer
            trace.push(depot);
            rest = capacity;
            detours += 1;
        }
        unvisited.remove(pos);
        rest -= demands[node];
        trace.push(node);
        current = node;
    }
    if current != depot {
        trace.push(depot);
    }
    let raw = path_length(distances, &trace);
    EpisodeResult {
        raw,
        gap: instance.gap(raw),
        decisions,
        violation: None,
        trace,
        detours,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::InstanceMeta;
    use crate::problems::oracle::{optimal_cvrp, optimal_tour};
    use crate::problems::{verify_solution, Builtin, DecisionError};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tsp(coords: Vec<[f64; 2]>) -> ProblemInstance {
        ProblemInstance::new("t", Payload::tsp(coords), 1.0, InstanceMeta::generated()).unwrap()
    }

    fn cvrp(coords: Vec<[f64; 2]>, demands: Vec<f64>, q: f64) -> ProblemInstance {
        ProblemInstance::new("c", Payload::cvrp(coords, demands, q), 1.0, InstanceMeta::generated()).unwrap()
    }

    /// Always returns the last unvisited node.
    struct Last;
    impl Decider for Last {
        fn decide(&self, q: &DecisionQuery<'_>) -> Result<Decision, DecisionError> {
            match q {
                DecisionQuery::Tsp { unvisited, .. } | DecisionQuery::Cvrp { unvisited, .. } => {
                    Ok(Decision::Node(*unvisited.last().unwrap() as i64))
                }
                _ => Err(DecisionError("wrong task".into())),
            }
        }
    }

    struct Fixed(i64);
    impl Decider for Fixed {
        fn decide(&self, _: &DecisionQuery<'_>) -> Result<Decision, DecisionError> {
            Ok(Decision::Node(self.0))
        }
    }

    #[test]
    fn triangle_tour_any_decider() {
        let inst = tsp(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
        let expected = 2.0 + 2f64.sqrt();
        for res in [eval_tsp(&Builtin::TspNearest, &inst), eval_tsp(&Last, &inst)] {
            assert!((res.raw - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn two_node_tour() {
        let inst = tsp(vec![[0.1, 0.1], [0.4, 0.5]]);
        let res = eval_tsp(&Builtin::TspNearest, &inst);
        assert!((res.raw - 1.0).abs() < 1e-12);
        assert_eq!(res.trace, vec![0, 1]);
    }

    #[test]
    fn tsp_rejects_bad_nodes() {
        let inst = tsp(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
        assert!(eval_tsp(&Fixed(0), &inst).violation.unwrap().contains("already visited"));
        assert!(eval_tsp(&Fixed(9), &inst).violation.unwrap().contains("out of range"));
        assert!(eval_tsp(&Fixed(-1), &inst).violation.unwrap().contains("out of range"));
    }

    #[test]
    fn tsp_any_decider_at_least_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let coords: Vec<[f64; 2]> = (0..7).map(|_| [rng.random(), rng.random()]).collect();
            let inst = tsp(coords);
            let Payload::Tsp { distances, .. } = inst.payload() else { unreachable!() };
            let opt = optimal_tour(distances);
            for res in [eval_tsp(&Builtin::TspNearest, &inst), eval_tsp(&Last, &inst)] {
                assert!(res.raw >= opt - 1e-12);
                let verified = verify_solution(&inst, &res.trace).unwrap();
                assert!((verified - res.raw).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_customer_round_trip() {
        let inst = cvrp(vec![[0.0, 0.0], [0.3, 0.4]], vec![0.0, 5.0], 5.0);
        for res in [eval_cvrp(&Builtin::CvrpNearestFeasible, &inst), eval_cvrp(&Last, &inst)] {
            assert!((res.raw - 1.0).abs() < 1e-12);
            assert_eq!(res.trace, vec![0, 1, 0]);
        }
    }

    #[test]
    fn full_demand_customers_split_routes() {
        let inst = cvrp(vec![[0.0, 0.0], [0.3, 0.4], [0.6, 0.8]], vec![0.0, 5.0, 5.0], 5.0);
        // Last picks node 2 first, then node 1 triggers a depot detour
        let last = eval_cvrp(&Last, &inst);
        assert_eq!(last.trace, vec![0, 2, 0, 1, 0]);
        assert_eq!(last.detours, 1);
        let nearest = eval_cvrp(&Builtin::CvrpNearestFeasible, &inst);
        assert_eq!(nearest.trace, vec![0, 1, 0, 2, 0]);
        assert!((last.raw - 3.0).abs() < 1e-12);
        assert!((nearest.raw - 3.0).abs() < 1e-12);
    }

    #[test]
    fn negative_choice_returns_to_depot() {
        struct MinusOneWhenTight;
        impl Decider for MinusOneWhenTight {
            fn decide(&self, q: &DecisionQuery<'_>) -> Result<Decision, DecisionError> {
                let DecisionQuery::Cvrp { unvisited, rest_capacity, demands, .. } = q else {
                    unreachable!()
                };
                Ok(Decision::Node(
                    unvisited
                        .iter()
                        .find(|&&u| demands[u] <= *rest_capacity)
                        .map_or(-1, |&u| u as i64),
                ))
            }
        }
        let inst = cvrp(vec![[0.0, 0.0], [0.3, 0.4], [0.6, 0.8]], vec![0.0, 4.0, 4.0], 5.0);
        let res = eval_cvrp(&MinusOneWhenTight, &inst);
        assert_eq!(res.trace, vec![0, 1, 0, 2, 0]);
        assert_eq!(res.detours, 0);
        assert!(eval_cvrp(&Fixed(-1), &inst).violation.unwrap().contains("depot"));
        assert!(eval_cvrp(&Fixed(7), &inst).violation.unwrap().contains("out of range"));
    }

    #[test]
    fn cvrp_any_decider_at_least_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let n = rng.random_range(2..=6);
            let coords: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
            let mut demands: Vec<f64> = (0..n).map(|_| rng.random_range(1..=10) as f64).collect();
            demands[0] = 0.0;
            let inst = cvrp(coords, demands, rng.random_range(10..=20) as f64);
            let opt = optimal_cvrp(&inst).unwrap();
            for res in [eval_cvrp(&Builtin::CvrpNearestFeasible, &inst), eval_cvrp(&Last, &inst)] {
                assert!(res.raw >= opt - 1e-12);
                let verified = verify_solution(&inst, &res.trace).unwrap();
                assert!((verified - res.raw).abs() < 1e-12);
            }
        }
    }
}
