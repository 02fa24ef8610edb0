//! Running heuristic code.
//!
//! Built-in rules and code inside the numpy dialect understood by
//! [`interp::Program`] run in-process. Everything else is shipped to a pool
//! of worker processes that run whole episodes and return traces, which are
//! verified here before scoring.

pub mod interp;
pub mod pool;
pub mod protocol;
pub mod worker;

use std::collections::HashMap;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DedupeKey, Heuristic, PerformanceVector, ProblemInstance, Task};
use crate::problems::{evaluate, Builtin, Decider, EpisodeResult};

pub use interp::{InterpError, Program};
pub use pool::{WorkerConfig, WorkerHandle, WorkerPool, WorkerState, WorkerStats, INFEASIBLE_TRACE, TIMEOUT, WORKER_FAULT};

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("cannot start worker: {0}")]
    Spawn(String),
    #[error("worker pool exhausted: {0}")]
    PoolExhausted(String),
    #[error("invalid executor configuration: {0}")]
    Config(String),
}

/// Where generated code runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// In-process when the code is in the supported dialect, else workers.
    #[default]
    Auto,
    /// Never start workers; unsupported code is invalid.
    InProcess,
    /// Always use workers, except for built-in heuristics.
    Workers,
}

/// Scores of one heuristic over an instance set, plus the first failure.
#[derive(Debug, Clone, PartialEq)]
pub struct SetEvaluation {
    pub vector: PerformanceVector,
    /// Index and reason of the first invalid episode in instance order.
    pub failure: Option<(usize, String)>,
}

impl SetEvaluation {
    /// Applies the strict policy: one invalid episode invalidates the whole
    /// vector.
    pub fn from_episodes(episodes: &[Option<EpisodeResult>]) -> Self {
        let m = episodes.len();
        let failure = episodes.iter().enumerate().find_map(|(i, e)| match e {
            Some(r) if r.is_valid() => None,
            Some(r) => Some((i, r.violation.clone().unwrap_or_default())),
            None => Some((i, "not evaluated".to_string())),
        });
        if failure.is_some() {
            return SetEvaluation {
                vector: PerformanceVector::invalid(m),
                failure,
            };
        }
        let gaps = episodes.iter().map(|e| e.as_ref().expect("checked").gap).collect();
        match PerformanceVector::valid(gaps) {
            Ok(vector) => SetEvaluation { vector, failure: None },
            Err(e) => SetEvaluation {
                vector: PerformanceVector::invalid(m),
                failure: Some((0, e.to_string())),
            },
        }
    }

    fn invalid(m: usize, reason: String) -> Self {
        SetEvaluation {
            vector: PerformanceVector::invalid(m),
            failure: Some((0, reason)),
        }
    }
}

/// Something that turns a heuristic into a performance vector.
pub trait Evaluator: Send + Sync {
    fn evaluate_on_set(
        &self,
        heuristic: &Heuristic,
        task: Task,
        instances: &[ProblemInstance],
    ) -> Result<SetEvaluation, ExecError>;
}

fn builtin_keys() -> &'static HashMap<DedupeKey, Builtin> {
    static KEYS: OnceLock<HashMap<DedupeKey, Builtin>> = OnceLock::new();
    KEYS.get_or_init(|| {
        Builtin::ALL
            .into_iter()
            .map(|b| (crate::domain::make_dedupe_key(b.reference_source()), b))
            .collect()
    })
}

/// The built-in rule whose reference source matches `heuristic`, if any.
pub fn as_builtin(heuristic: &Heuristic, task: Task) -> Option<Builtin> {
    builtin_keys()
        .get(&heuristic.dedupe_key)
        .copied()
        .filter(|b| b.task() == task)
}

enum Plan {
    Local(Box<dyn Decider + Send + Sync>),
    Remote,
    Reject(String),
}

/// Routes heuristics to the builtin, interpreter or worker path.
pub struct Executor {
    route: Route,
    worker: WorkerConfig,
    pool: OnceLock<Result<WorkerPool, String>>,
}

impl Executor {
    pub fn new(route: Route, worker: WorkerConfig) -> Self {
        Executor {
            route,
            worker,
            pool: OnceLock::new(),
        }
    }

    /// An executor that never spawns processes.
    pub fn in_process() -> Self {
        Executor::new(Route::InProcess, WorkerConfig::default())
    }

    pub fn route(&self) -> Route {
        self.route
    }

    fn pool(&self) -> Result<&WorkerPool, ExecError> {
        self.pool
            .get_or_init(|| WorkerPool::new(self.worker.clone()).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| ExecError::Config(e.clone()))
    }

    /// Worker statistics, if the pool has been started.
    pub fn worker_stats(&self) -> Option<WorkerStats> {
        self.pool.get().and_then(|p| p.as_ref().ok()).map(WorkerPool::stats)
    }

    fn plan(&self, heuristic: &Heuristic, task: Task) -> Plan {
        if let Some(b) = as_builtin(heuristic, task) {
            return Plan::Local(Box::new(b));
        }
        if self.route == Route::Workers {
            return Plan::Remote;
        }
        match Program::parse(&heuristic.code, task) {
            Ok(p) => Plan::Local(Box::new(p)),
            Err(e) if self.route == Route::InProcess => Plan::Reject(e.to_string()),
            Err(e) => {
                log::debug!("{}: {e}; using workers", heuristic.id);
                Plan::Remote
            }
        }
    }

    /// Runs one episode.
    pub fn execute(&self, heuristic: &Heuristic, instance: &ProblemInstance) -> Result<EpisodeResult, ExecError> {
        match self.plan(heuristic, instance.task()) {
            Plan::Local(d) => Ok(evaluate(d.as_ref(), instance)),
            Plan::Remote => self.pool()?.execute(heuristic, instance),
            Plan::Reject(reason) => Ok(EpisodeResult::failed(reason, 0)),
        }
    }
}

impl Evaluator for Executor {
    fn evaluate_on_set(
        &self,
        heuristic: &Heuristic,
        task: Task,
        instances: &[ProblemInstance],
    ) -> Result<SetEvaluation, ExecError> {
        if let Some(bad) = instances.iter().find(|i| i.task() != task) {
            return Err(ExecError::Config(format!("instance {} is not a {task} instance", bad.id())));
        }
        let episodes: Vec<Option<EpisodeResult>> = match self.plan(heuristic, task) {
            Plan::Local(d) => instances.par_iter().map(|i| Some(evaluate(d.as_ref(), i))).collect(),
            Plan::Remote => self.pool()?.execute_all(heuristic, instances)?,
            Plan::Reject(reason) => return Ok(SetEvaluation::invalid(instances.len(), reason)),
        };
        Ok(SetEvaluation::from_episodes(&episodes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{HeuristicId, Origin};
    use crate::instances::{generate, GeneratorSpec};

    fn h(task: Task, code: &str) -> Heuristic {
        Heuristic::new(HeuristicId(0), task, "", code, Origin::Init, vec![]).unwrap()
    }

    #[test]
    fn builtin_sources_are_recognised() {
        for b in Builtin::ALL {
            assert_eq!(as_builtin(&h(b.task(), b.reference_source()), b.task()), Some(b));
        }
        let first_fit = h(Task::Obp, Builtin::FirstFit.reference_source());
        assert_eq!(as_builtin(&first_fit, Task::Tsp), None);
    }

    #[test]
    fn first_fit_over_training_set_is_valid() {
        let instances = generate(&GeneratorSpec::training(Task::Obp, 3)).unwrap();
        let exec = Executor::in_process();
        let ev = exec
            .evaluate_on_set(&h(Task::Obp, Builtin::FirstFit.reference_source()), Task::Obp, &instances)
            .unwrap();
        assert!(ev.vector.is_valid());
        assert_eq!(ev.vector.len(), 128);
    }

    #[test]
    fn one_failing_episode_invalidates_the_vector() {
        let instances = generate(&GeneratorSpec::small(Task::Obp, 8, 5)).unwrap();
        // indexes past the open bins
        let biggest = instances[3].payload().size();
        let code = format!(
            "import numpy as np\ndef priority(item, bins):\n    return bins[{}] + bins * 0\n",
            biggest
        );
        let ev = Executor::in_process()
            .evaluate_on_set(&h(Task::Obp, &code), Task::Obp, &instances)
            .unwrap();
        assert!(!ev.vector.is_valid());
        assert!(ev.failure.unwrap().1.contains("out of bounds"));
    }

    #[test]
    fn unsupported_code_is_rejected_without_workers() {
        let code = "def priority(item, bins):\n    return sorted(bins)\n";
        let instances = generate(&GeneratorSpec::small(Task::Obp, 2, 1)).unwrap();
        let ev = Executor::in_process()
            .evaluate_on_set(&h(Task::Obp, code), Task::Obp, &instances)
            .unwrap();
        assert!(!ev.vector.is_valid());
    }

    #[test]
    fn task_mismatch_is_an_error() {
        let instances = generate(&GeneratorSpec::small(Task::Obp, 2, 1)).unwrap();
        let heur = h(Task::Tsp, Builtin::TspNearest.reference_source());
        assert!(Executor::in_process().evaluate_on_set(&heur, Task::Tsp, &instances).is_err());
    }
}
