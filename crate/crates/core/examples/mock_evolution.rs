//! A complete evolutionary run with the offline generator.
//!
//! cargo run --release --example mock_evolution -- [task] [budget]
//!
//! Defaults to TSP: on tiny bin packing instances most rules reach the
//! same bin counts, so the trace stays flat.

use eohs::domain::Task;
use eohs::engine::{Engine, EvolutionConfig};
use eohs::exec::Executor;
use eohs::instances::{generate, GeneratorSpec};
use eohs::llm::MockGenerator;

fn main() {
    let mut args = std::env::args().skip(1);
    let task: Task = args.next().map(|s| s.parse().unwrap()).unwrap_or(Task::Tsp);
    let budget: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(40);
    let config = EvolutionConfig {
        task,
        population_size: 5,
        eval_budget: budget,
        seed: 3,
        ..EvolutionConfig::default()
    };
    let instances = generate(&GeneratorSpec::small(task, 16, 3)).unwrap();
    let generator = MockGenerator::new(config.seed);
    let executor = Executor::in_process();
    let engine = Engine::new(&config, &generator, &executor, &instances).unwrap();
    let state = engine
        .run_with(|s| {
            let p = s.convergence.last().unwrap();
            println!(
                "gen {:>2}  evals {:>3}  set cpi {:.5}  best single {:.5}",
                p.generation, p.evals_used, p.population_cpi, p.best_single_mean
            );
        })
        .unwrap();
    println!("\nfinal population:");
    for h in state.members() {
        let row = state.matrix.row_of(h.id).unwrap();
        println!("  {} ({}) mean {:.5}: {}", h.id, h.origin, state.matrix.rows()[row].mean(), h.thought);
    }
    println!("{} rejected replies", state.failures.len());
}
