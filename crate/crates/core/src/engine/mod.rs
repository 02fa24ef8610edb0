//! The evolutionary loop.
//!
//! A run initializes `n` heuristics from the init prompt, then repeatedly
//! breeds up to `n` offspring with the diversity (CS) and local (LS)
//! operators and keeps the `n` rows that best cover the instance set
//! together. One heuristic evaluated on the whole instance set costs one
//! unit of budget.

mod config;

pub use config::{Ablation, EvolutionConfig, InstanceSetSpec, LlmSpec};

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DedupeKey, DomainError, Heuristic, HeuristicId, Origin, PerformanceMatrix, Population, ProblemInstance};
use crate::exec::{Evaluator, ExecError};
use crate::llm::{build_prompt, parse_reply, Generator, LlmError, PromptKind};
use crate::metrics::{self, MetricsError};
use crate::selection::{self, SelectionError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("initialization failed after {} failure(s): {reason}", failures.len())]
    Init { reason: String, failures: Vec<String> },
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Prompt(#[from] LlmError),
}

/// Population quality after initialization or a generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub generation: usize,
    pub evals_used: usize,
    pub population_cpi: f64,
    pub best_single_mean: f64,
}

/// A generator reply that did not become a population candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub generation: usize,
    pub kind: PromptKind,
    /// Set when the code was evaluated (and so used budget).
    pub heuristic: Option<HeuristicId>,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    /// The evaluation budget is used up.
    Budget,
    /// Too many consecutive generations produced nothing to evaluate.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct RunState {
    pub population: Population,
    /// Every evaluated heuristic, valid or not.
    pub matrix: PerformanceMatrix,
    /// `archive[r]` owns matrix row `r`.
    pub archive: Vec<Heuristic>,
    pub evals_used: usize,
    pub generation: usize,
    pub convergence: Vec<ConvergencePoint>,
    pub failures: Vec<FailureRecord>,
    pub termination: Option<Termination>,
    rng: ChaCha8Rng,
    keys: HashMap<DedupeKey, HeuristicId>,
    calls: u64,
    empty_generations: usize,
}

impl RunState {
    /// Heuristics of the current population in member order.
    pub fn members(&self) -> Vec<&Heuristic> {
        self.population.members().iter().map(|&r| &self.archive[r]).collect()
    }

    /// Number of generator calls made so far.
    pub fn generator_calls(&self) -> u64 {
        self.calls
    }
}

enum Attempt {
    /// Evaluated and valid.
    Valid(usize),
    /// Evaluated but invalid; budget was used.
    Invalid(HeuristicId, String),
    /// Never evaluated; no budget used.
    Rejected(String),
}

/// Drives a run over a fixed instance set.
pub struct Engine<'a> {
    config: &'a EvolutionConfig,
    generator: &'a dyn Generator,
    evaluator: &'a dyn Evaluator,
    instances: &'a [ProblemInstance],
}

impl<'a> Engine<'a> {
    pub fn new(
        config: &'a EvolutionConfig,
        generator: &'a dyn Generator,
        evaluator: &'a dyn Evaluator,
        instances: &'a [ProblemInstance],
    ) -> Result<Self, EngineError> {
        config.validate()?;
        if instances.is_empty() {
            return Err(EngineError::Config("instance set is empty".into()));
        }
        if let Some(bad) = instances.iter().find(|i| i.task() != config.task) {
            return Err(EngineError::Config(format!(
                "instance {} is not a {} instance",
                bad.id(),
                config.task
            )));
        }
        Ok(Engine {
            config,
            generator,
            evaluator,
            instances,
        })
    }

    fn attempt(&self, state: &mut RunState, kind: PromptKind, parents: &[usize]) -> Result<Attempt, EngineError> {
        let task = self.config.task;
        let parent_heuristics: Vec<Heuristic> = parents.iter().map(|&r| state.archive[r].clone()).collect();
        let prompt = build_prompt(kind, task, &parent_heuristics)?;
        let seed = state.calls;
        state.calls += 1;
        let raw = match self.generator.generate(&prompt, seed) {
            Ok(raw) => raw,
            Err(e) => return Ok(Attempt::Rejected(format!("generator: {e}"))),
        };
        let reply = match parse_reply(&raw) {
            Ok(r) => r,
            Err(e) => return Ok(Attempt::Rejected(format!("parse: {e}"))),
        };
        let origin = match kind {
            PromptKind::Init => Origin::Init,
            PromptKind::Cs => Origin::Cs,
            PromptKind::Ls => Origin::Ls,
        };
        let id = HeuristicId(state.archive.len() as u64 + 1);
        let parent_ids = parent_heuristics.iter().map(|h| h.id).collect();
        let heuristic = match Heuristic::new(id, task, reply.thought, reply.code, origin, parent_ids) {
            Ok(h) => h,
            Err(e) => return Ok(Attempt::Rejected(format!("parse: {e}"))),
        };
        if let Some(existing) = state.keys.get(&heuristic.dedupe_key) {
            return Ok(Attempt::Rejected(format!("duplicate of {existing}")));
        }
        let evaluation = self.evaluator.evaluate_on_set(&heuristic, task, self.instances)?;
        state.evals_used += 1;
        let row = state.matrix.push(id, evaluation.vector)?;
        state.keys.insert(heuristic.dedupe_key.clone(), id);
        state.archive.push(heuristic);
        Ok(match evaluation.failure {
            None => Attempt::Valid(row),
            Some((i, reason)) => Attempt::Invalid(id, format!("{}: {reason}", self.instances[i].id())),
        })
    }

    fn convergence_point(&self, state: &RunState) -> Result<ConvergencePoint, EngineError> {
        let members = state.population.members();
        let report = metrics::cpi(&state.matrix, members)?;
        let best_single_mean = members
            .iter()
            .map(|&r| state.matrix.rows()[r].mean())
            .fold(f64::INFINITY, f64::min);
        Ok(ConvergencePoint {
            generation: state.generation,
            evals_used: state.evals_used,
            population_cpi: report.cpi,
            best_single_mean,
        })
    }

    /// Produces the initial population from the init prompt.
    pub fn initialize(&self) -> Result<RunState, EngineError> {
        let n = self.config.population_size;
        let ids = self.instances.iter().map(|i| i.id().to_string()).collect();
        let mut state = RunState {
            population: Population::new(vec![], 0, &[], &PerformanceMatrix::new(vec![]))?,
            matrix: PerformanceMatrix::new(ids),
            archive: Vec::new(),
            evals_used: 0,
            generation: 0,
            convergence: Vec::new(),
            failures: Vec::new(),
            termination: None,
            rng: ChaCha8Rng::seed_from_u64(self.config.seed),
            keys: HashMap::new(),
            calls: 0,
            empty_generations: 0,
        };
        let mut members = Vec::with_capacity(n);
        let mut consecutive = 0;
        while members.len() < n {
            if state.evals_used >= self.config.eval_budget {
                return Err(init_error(&state, "evaluation budget exhausted"));
            }
            match self.attempt(&mut state, PromptKind::Init, &[])? {
                Attempt::Valid(row) => {
                    members.push(row);
                    consecutive = 0;
                    continue;
                }
                Attempt::Invalid(id, reason) => state.failures.push(FailureRecord {
                    generation: 0,
                    kind: PromptKind::Init,
                    heuristic: Some(id),
                    reason,
                }),
                Attempt::Rejected(reason) => state.failures.push(FailureRecord {
                    generation: 0,
                    kind: PromptKind::Init,
                    heuristic: None,
                    reason,
                }),
            }
            consecutive += 1;
            if consecutive >= self.config.retries {
                return Err(init_error(&state, "retry limit reached"));
            }
        }
        state.population = Population::new(members, 0, &state.archive, &state.matrix)?;
        let point = self.convergence_point(&state)?;
        log::info!(
            "initialized {n} heuristics with {} evaluation(s); cpi {:.6}",
            state.evals_used,
            point.population_cpi
        );
        state.convergence.push(point);
        if state.evals_used >= self.config.eval_budget {
            state.termination = Some(Termination::Budget);
        }
        Ok(state)
    }

    fn parents(&self, state: &mut RunState, kind: PromptKind) -> Result<Vec<usize>, EngineError> {
        let members = state.population.members();
        Ok(match kind {
            PromptKind::Cs => {
                let (a, b) = selection::select_cs_parents(&state.matrix, members)?;
                vec![a, b]
            }
            _ => {
                let members = members.to_vec();
                vec![selection::select_ls_parent(&state.matrix, &members, &mut state.rng)?]
            }
        })
    }

    /// Breeds up to `n` offspring and selects the next population.
    pub fn evolve_generation(&self, state: &mut RunState) -> Result<(), EngineError> {
        let n = self.config.population_size;
        let generation = state.generation + 1;
        let mix = self.config.effective_mix();
        let mut offspring = Vec::new();
        let mut evaluated = 0;
        for _ in 0..n {
            if state.evals_used >= self.config.eval_budget {
                break;
            }
            let kind = if state.rng.random::<f64>() < mix {
                PromptKind::Cs
            } else {
                PromptKind::Ls
            };
            let mut consecutive = 0;
            while consecutive < self.config.retries {
                let parents = self.parents(state, kind)?;
                let (heuristic, reason) = match self.attempt(state, kind, &parents)? {
                    Attempt::Valid(row) => {
                        offspring.push(row);
                        evaluated += 1;
                        break;
                    }
                    Attempt::Invalid(id, reason) => {
                        evaluated += 1;
                        (Some(id), reason)
                    }
                    Attempt::Rejected(reason) => (None, reason),
                };
                log::debug!("generation {generation}: {kind:?} offspring rejected: {reason}");
                state.failures.push(FailureRecord {
                    generation,
                    kind,
                    heuristic,
                    reason,
                });
                if heuristic.is_some() {
                    // the slot used its evaluation
                    break;
                }
                consecutive += 1;
            }
        }

        let mut candidates = state.population.members().to_vec();
        candidates.extend(&offspring);
        let next = if self.config.ablation.disable_cpm {
            metrics::rank_by_average(&state.matrix, &candidates)?
                .into_iter()
                .take(n)
                .collect()
        } else {
            selection::cpm_select(&state.matrix, &candidates, n)?.chosen
        };
        let mut next = Population::new(next, generation, &state.archive, &state.matrix)?;
        if self.config.elitist {
            let old = metrics::cpi(&state.matrix, state.population.members())?.cpi;
            let new = metrics::cpi(&state.matrix, next.members())?.cpi;
            if old < new {
                next = Population::new(state.population.members().to_vec(), generation, &state.archive, &state.matrix)?;
            }
        }
        state.population = next;
        state.generation = generation;
        let point = self.convergence_point(state)?;
        log::info!(
            "generation {generation}: {} new, {} evaluation(s) used, cpi {:.6}",
            offspring.len(),
            state.evals_used,
            point.population_cpi
        );
        state.convergence.push(point);
        if evaluated == 0 {
            state.empty_generations += 1;
        } else {
            state.empty_generations = 0;
        }
        if state.evals_used >= self.config.eval_budget {
            state.termination = Some(Termination::Budget);
        } else if state.empty_generations >= self.config.retries {
            state.termination = Some(Termination::Stalled);
        }
        Ok(())
    }

    /// Initializes and evolves until the budget is spent.
    pub fn run(&self) -> Result<RunState, EngineError> {
        self.run_with(|_| {})
    }

    /// Like [`Engine::run`], calling `observe` after initialization and after
    /// every generation.
    pub fn run_with(&self, mut observe: impl FnMut(&RunState)) -> Result<RunState, EngineError> {
        let mut state = self.initialize()?;
        observe(&state);
        while state.termination.is_none() {
            self.evolve_generation(&mut state)?;
            observe(&state);
        }
        Ok(state)
    }
}

fn init_error(state: &RunState, reason: &str) -> EngineError {
    EngineError::Init {
        reason: reason.to_string(),
        failures: state.failures.iter().map(|f| f.reason.clone()).collect(),
    }
}

/// CPI of the greedy selection at one set size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizePoint {
    pub size: usize,
    pub cpi: f64,
}

/// Greedy-selection CPI from `pool` for each requested size.
pub fn cpi_vs_setsize(
    matrix: &PerformanceMatrix,
    pool: &[usize],
    sizes: &[usize],
) -> Result<Vec<SizePoint>, SelectionError> {
    if sizes.contains(&0) {
        return Err(SelectionError::SizeTooSmall { min: 1, got: 0 });
    }
    let Some(largest) = sizes.iter().copied().max() else {
        return Ok(vec![]);
    };
    // the greedy trace is prefix-consistent, so one pass covers every size
    let outcome = selection::cpm_select(matrix, pool, largest)?;
    Ok(sizes
        .iter()
        .map(|&size| SizePoint {
            size,
            cpi: outcome.cpi_trace[size - 1],
        })
        .collect())
}

#[cfg(test)]
mod tests;
