use std::collections::VecDeque;
use std::sync::Mutex;

use super::*;
use crate::domain::{PerformanceVector, Task};
use crate::exec::{Executor, SetEvaluation};
use crate::instances::{generate, GeneratorSpec};
use crate::llm::{MockGenerator, PromptBundle};

/// Replays canned replies, then defers to the mock.
struct Script {
    replies: Mutex<VecDeque<String>>,
    fallback: MockGenerator,
}

impl Script {
    fn new<I: IntoIterator<Item = String>>(replies: I) -> Self {
        Script {
            replies: Mutex::new(replies.into_iter().collect()),
            fallback: MockGenerator::new(0),
        }
    }
}

impl Generator for Script {
    fn generate(&self, prompt: &PromptBundle, seed: u64) -> Result<String, LlmError> {
        match self.replies.lock().unwrap().pop_front() {
            Some(r) => Ok(r),
            None => self.fallback.generate(prompt, seed),
        }
    }
}

/// Scores come from a `v = "..."` line in the code; `v = "crash"` fails
/// on the first instance.
struct Table;

impl Evaluator for Table {
    fn evaluate_on_set(&self, h: &Heuristic, _: Task, instances: &[ProblemInstance]) -> Result<SetEvaluation, ExecError> {
        let line = h.code.lines().find_map(|l| l.trim().strip_prefix("v = \"")).unwrap();
        let spec = line.trim_end_matches('"');
        if spec == "crash" {
            return Ok(SetEvaluation {
                vector: PerformanceVector::invalid(instances.len()),
                failure: Some((0, "heuristic-error: boom".into())),
            });
        }
        let scores = spec.split_whitespace().map(|s| s.parse().unwrap()).collect();
        Ok(SetEvaluation {
            vector: PerformanceVector::valid(scores).unwrap(),
            failure: None,
        })
    }
}

fn reply(scores: &str) -> String {
    format!("{{{{scores {scores}}}}}\n```python\ndef priority(item, bins):\n    v = \"{scores}\"\n    return bins\n```\n")
}

fn three_instances() -> Vec<ProblemInstance> {
    generate(&GeneratorSpec::small(Task::Obp, 3, 1)).unwrap()
}

fn config(n: usize, budget: usize) -> EvolutionConfig {
    EvolutionConfig {
        population_size: n,
        eval_budget: budget,
        retries: 3,
        ..EvolutionConfig::default()
    }
}

#[test]
fn budget_equal_to_population_stops_after_init() {
    let cfg = config(4, 4);
    let instances = generate(&GeneratorSpec::small(Task::Obp, 4, 3)).unwrap();
    let generator = MockGenerator::new(1);
    let executor = Executor::in_process();
    let state = Engine::new(&cfg, &generator, &executor, &instances).unwrap().run().unwrap();
    assert_eq!(state.evals_used, 4);
    assert_eq!(state.population.len(), 4);
    assert_eq!(state.generation, 0);
    assert_eq!(state.convergence.len(), 1);
    assert_eq!(state.termination, Some(Termination::Budget));
}

#[test]
fn duplicate_consumes_a_retry_but_no_budget() {
    let cfg = config(2, 2);
    let instances = three_instances();
    let generator = Script::new([reply("1 1 1"), reply("1 1 1"), reply("2 2 2")]);
    let state = Engine::new(&cfg, &generator, &Table, &instances).unwrap().initialize().unwrap();
    assert_eq!(state.evals_used, 2);
    assert_eq!(state.generator_calls(), 3);
    assert_eq!(state.failures.len(), 1);
    assert!(state.failures[0].reason.starts_with("duplicate of h1"));
    assert_eq!(state.failures[0].heuristic, None);
}

#[test]
fn crashing_heuristic_uses_budget_and_stays_out() {
    let cfg = config(2, 3);
    let instances = three_instances();
    let generator = Script::new([reply("1 1 1"), reply("crash"), reply("2 2 2")]);
    let state = Engine::new(&cfg, &generator, &Table, &instances).unwrap().initialize().unwrap();
    assert_eq!(state.evals_used, 3);
    assert_eq!(state.matrix.len(), 3);
    assert_eq!(state.population.members(), &[0, 2]);
    assert_eq!(state.failures[0].heuristic, Some(HeuristicId(2)));
    assert!(state.failures[0].reason.contains("boom"));
}

#[test]
fn init_gives_up_after_consecutive_failures() {
    let cfg = config(2, 10);
    let instances = three_instances();
    let generator = Script::new(vec![reply("1 1 1"); 5]);
    let err = Engine::new(&cfg, &generator, &Table, &instances).unwrap().initialize().unwrap_err();
    match err {
        EngineError::Init { reason, failures } => {
            assert_eq!(reason, "retry limit reached");
            assert_eq!(failures.len(), 3);
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn init_fails_when_budget_runs_out() {
    let cfg = config(2, 2);
    let instances = three_instances();
    let generator = Script::new([reply("crash"), reply("1 1 1"), reply("2 2 2")]);
    let err = Engine::new(&cfg, &generator, &Table, &instances).unwrap().initialize().unwrap_err();
    assert!(matches!(err, EngineError::Init { ref reason, .. } if reason == "evaluation budget exhausted"));
}

#[test]
fn all_duplicate_offspring_leave_the_population_alone() {
    let cfg = config(2, 10);
    let instances = three_instances();
    let mut replies = vec![reply("1 2 3"), reply("3 2 1")];
    replies.extend(std::iter::repeat_n(reply("1 2 3"), 20));
    let generator = Script::new(replies);
    let engine = Engine::new(&cfg, &generator, &Table, &instances).unwrap();
    let mut state = engine.initialize().unwrap();
    let before = state.population.members().to_vec();
    engine.evolve_generation(&mut state).unwrap();
    assert_eq!(state.generation, 1);
    assert_eq!(state.evals_used, 2);
    assert_eq!(state.population.members(), before.as_slice());
    assert_eq!(state.failures.len(), 2 * cfg.retries);
    // the run ends once `retries` generations in a row evaluate nothing
    engine.evolve_generation(&mut state).unwrap();
    assert_eq!(state.termination, None);
    engine.evolve_generation(&mut state).unwrap();
    assert_eq!(state.termination, Some(Termination::Stalled));
}

#[test]
fn dominating_offspring_becomes_first_member() {
    let cfg = EvolutionConfig {
        ablation: Ablation {
            disable_cs: true,
            ..Ablation::default()
        },
        ..config(2, 3)
    };
    let instances = three_instances();
    let generator = Script::new([reply("1 2 3"), reply("3 2 1"), reply("0.5 0.5 0.5")]);
    let engine = Engine::new(&cfg, &generator, &Table, &instances).unwrap();
    let mut state = engine.initialize().unwrap();
    engine.evolve_generation(&mut state).unwrap();
    assert_eq!(state.population.members()[0], 2);
    assert_eq!(state.archive[2].origin, Origin::Ls);
    assert_eq!(state.termination, Some(Termination::Budget));
    // the budget ran out after the first slot of the generation
    assert_eq!(state.evals_used, 3);
}

#[test]
fn cpm_keeps_complementary_rows() {
    let cfg = config(2, 4);
    let instances = three_instances();
    let generator = Script::new([reply("1 1 1"), reply("1.1 1.1 1.1"), reply("2 0 2"), reply("0 2 0")]);
    let engine = Engine::new(&cfg, &generator, &Table, &instances).unwrap();
    let mut state = engine.initialize().unwrap();
    engine.evolve_generation(&mut state).unwrap();
    let mut members = state.population.members().to_vec();
    members.sort();
    // the two specialists cover every instance at zero
    assert_eq!(members, vec![2, 3]);
    assert_eq!(state.convergence.last().unwrap().population_cpi, 0.0);

    let cfg = EvolutionConfig {
        ablation: Ablation {
            disable_cpm: true,
            ..Ablation::default()
        },
        ..cfg
    };
    let generator = Script::new([reply("1 1 1"), reply("1.1 1.1 1.1"), reply("2 0 2"), reply("0 2 0")]);
    let engine = Engine::new(&cfg, &generator, &Table, &instances).unwrap();
    let mut state = engine.initialize().unwrap();
    engine.evolve_generation(&mut state).unwrap();
    let valid = state.matrix.valid_rows();
    let top: Vec<usize> = metrics::rank_by_average(&state.matrix, &valid).unwrap()[..2].to_vec();
    assert_eq!(state.population.members(), top.as_slice());
    assert_eq!(state.population.members(), &[3, 0]);
}

#[test]
fn elitist_guard_keeps_a_better_population() {
    // the offspring has the best mean but a worse CPI together with row 0
    let replies = || Script::new([reply("0 3 0"), reply("3 0 3"), reply("0.9 0.9 0.9")]);
    let instances = three_instances();
    let base = EvolutionConfig {
        ablation: Ablation {
            disable_cs: true,
            ..Ablation::default()
        },
        ..config(2, 3)
    };
    let plain = {
        let g = replies();
        let engine = Engine::new(&base, &g, &Table, &instances).unwrap();
        engine.run().unwrap()
    };
    assert_eq!(plain.population.members()[0], 2);
    let guarded = {
        let cfg = EvolutionConfig { elitist: true, ..base.clone() };
        let g = replies();
        let engine = Engine::new(&cfg, &g, &Table, &instances).unwrap();
        engine.run().unwrap()
    };
    assert_eq!(guarded.convergence.last().unwrap().population_cpi, 0.0);
    assert!(plain.convergence.last().unwrap().population_cpi > 0.0);
}

#[test]
fn one_generation_for_twice_the_population() {
    let cfg = config(3, 6);
    let instances = generate(&GeneratorSpec::small(Task::Obp, 4, 5)).unwrap();
    let generator = MockGenerator::new(2);
    let executor = Executor::in_process();
    let state = Engine::new(&cfg, &generator, &executor, &instances).unwrap().run().unwrap();
    assert_eq!(state.generation, 1);
    assert_eq!(state.evals_used, 6);
    assert_eq!(state.convergence.len(), 2);
    assert_eq!(state.population.len(), 3);
}

#[test]
fn mock_runs_are_reproducible() {
    let cfg = EvolutionConfig {
        seed: 7,
        ..config(3, 12)
    };
    let instances = generate(&GeneratorSpec::small(Task::Obp, 4, 7)).unwrap();
    let executor = Executor::in_process();
    let run = || {
        let generator = MockGenerator::new(cfg.seed);
        let state = Engine::new(&cfg, &generator, &executor, &instances).unwrap().run().unwrap();
        let codes: Vec<String> = state.archive.iter().map(|h| h.code.clone()).collect();
        (serde_json::to_string(&state.convergence).unwrap(), codes)
    };
    let a = run();
    assert_eq!(a, run());
    let trace: Vec<ConvergencePoint> = serde_json::from_str(&a.0).unwrap();
    assert!(trace.windows(2).all(|w| w[0].evals_used <= w[1].evals_used));
    assert_eq!(trace.last().unwrap().evals_used, 12);
}

#[test]
fn rejects_mismatched_instances() {
    let cfg = config(2, 4);
    let instances = generate(&GeneratorSpec::small(Task::Tsp, 2, 0)).unwrap();
    let generator = MockGenerator::new(0);
    assert!(Engine::new(&cfg, &generator, &Table, &instances).is_err());
    assert!(Engine::new(&cfg, &generator, &Table, &[]).is_err());
}

#[test]
fn setsize_series() {
    let m = PerformanceMatrix::from_scores(&[vec![0.5, 0.1, 0.3], vec![0.1, 0.5, 0.3], vec![0.3, 0.3, 0.0]]).unwrap();
    let pts = cpi_vs_setsize(&m, &[0, 1, 2], &[1, 2, 3]).unwrap();
    assert!((pts[0].cpi - 0.2).abs() < 1e-12);
    assert!(pts.windows(2).all(|w| w[1].cpi <= w[0].cpi));
    assert!((pts[2].cpi - 0.2 / 3.0).abs() < 1e-12);
    assert!(cpi_vs_setsize(&m, &[0, 1, 2], &[4]).is_err());
    assert!(cpi_vs_setsize(&m, &[0, 1, 2], &[0]).is_err());
}
