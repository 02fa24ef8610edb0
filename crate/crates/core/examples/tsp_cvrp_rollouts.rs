//! Built-in routing rules on generated instances, and against exact optima
//! on tiny ones.
//!
//! cargo run --release --example tsp_cvrp_rollouts

use eohs::domain::{InstanceMeta, Payload, ProblemInstance, Task};
use eohs::instances::{generate, GeneratorSpec};
use eohs::problems::oracle::{optimal_cvrp, optimal_tour};
use eohs::problems::{evaluate, verify_solution, Builtin};

fn main() {
    for (task, rule) in [(Task::Tsp, Builtin::TspNearest), (Task::Cvrp, Builtin::CvrpNearestFeasible)] {
        let set = generate(&GeneratorSpec::small(task, 8, 1)).unwrap();
        let gaps: Vec<f64> = set.iter().map(|i| evaluate(&rule, i).gap).collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        println!("{task}: {} on 8 instances, mean gap to the 2-opt baseline {:+.4}", rule.name(), mean);
    }

    let coords = vec![[0.0, 0.0], [0.9, 0.1], [0.2, 0.8], [0.6, 0.6], [0.1, 0.3], [0.8, 0.9]];
    let tsp = ProblemInstance::new("toy-tsp", Payload::tsp(coords.clone()), 1.0, InstanceMeta::generated()).unwrap();
    let r = evaluate(&Builtin::TspNearest, &tsp);
    let Payload::Tsp { distances, .. } = tsp.payload() else { unreachable!() };
    println!("toy tsp: nearest {:.4} (tour {:?}), optimum {:.4}", r.raw, r.trace, optimal_tour(distances));
    assert_eq!(verify_solution(&tsp, &r.trace).unwrap(), r.raw);

    let demands = vec![0.0, 3.0, 4.0, 2.0, 5.0, 3.0];
    let cvrp = ProblemInstance::new("toy-cvrp", Payload::cvrp(coords, demands, 8.0), 1.0, InstanceMeta::generated()).unwrap();
    let r = evaluate(&Builtin::CvrpNearestFeasible, &cvrp);
    println!(
        "toy cvrp: nearest feasible {:.4} (sequence {:?}), optimum {:.4}",
        r.raw,
        r.trace,
        optimal_cvrp(&cvrp).unwrap()
    );
}
