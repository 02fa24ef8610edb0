use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::domain::Task;
use crate::exec::{Route, WorkerConfig};
use crate::instances::GeneratorSpec;
use crate::llm::ChatConfig;

use super::EngineError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ablation {
    pub disable_cs: bool,
    pub disable_ls: bool,
    pub disable_cpm: bool,
}

/// Which generator produces heuristic text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum LlmSpec {
    #[default]
    Mock,
    Live(ChatConfig),
}

/// Where the training instances come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum InstanceSetSpec {
    Generated(GeneratorSpec),
    /// A JSONL file written by `eohs gen`.
    File { path: PathBuf },
    /// A directory of BPPLIB, TSPLIB or CVRPLIB files.
    Benchmark { dir: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    pub task: Task,
    pub population_size: usize,
    /// Maximum number of heuristics evaluated on the full instance set.
    pub eval_budget: usize,
    pub seed: u64,
    /// Probability of the diversity operator per offspring.
    pub operator_mix: f64,
    pub ablation: Ablation,
    /// Consecutive generation failures tolerated per offspring slot, and
    /// consecutive empty generations tolerated per run.
    pub retries: usize,
    /// Keep the previous population when the new one has a worse CPI.
    pub elitist: bool,
    pub llm: LlmSpec,
    pub route: Route,
    pub worker: WorkerConfig,
    /// Defaults to the training recipe for `task`, seeded with `seed`.
    pub instances: Option<InstanceSetSpec>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            task: Task::Obp,
            population_size: 10,
            eval_budget: 2000,
            seed: 0,
            operator_mix: 0.5,
            ablation: Ablation::default(),
            retries: 10,
            elitist: false,
            llm: LlmSpec::Mock,
            route: Route::Auto,
            worker: WorkerConfig::default(),
            instances: None,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let fail = |m: String| Err(EngineError::Config(m));
        let min_pop = if self.ablation.disable_cs { 1 } else { 2 };
        if self.population_size < min_pop {
            return fail(format!(
                "population size {} is below {min_pop}",
                self.population_size
            ));
        }
        if self.eval_budget < self.population_size {
            return fail(format!(
                "budget {} is smaller than the population size {}",
                self.eval_budget, self.population_size
            ));
        }
        if !(0.0..=1.0).contains(&self.operator_mix) {
            return fail(format!("operator mix {} outside [0, 1]", self.operator_mix));
        }
        if self.ablation.disable_cs && self.ablation.disable_ls {
            return fail("disabling both search operators leaves no way to produce offspring".into());
        }
        if self.retries == 0 {
            return fail("retries must be at least 1".into());
        }
        if let Some(InstanceSetSpec::Generated(g)) = &self.instances {
            if g.task != self.task {
                return fail(format!("instance generator is for {}, run is for {}", g.task, self.task));
            }
        }
        Ok(())
    }

    /// Probability of choosing the diversity operator after ablations.
    pub fn effective_mix(&self) -> f64 {
        if self.ablation.disable_cs {
            0.0
        } else if self.ablation.disable_ls {
            1.0
        } else {
            self.operator_mix
        }
    }

    pub fn instance_spec(&self) -> InstanceSetSpec {
        self.instances
            .clone()
            .unwrap_or_else(|| InstanceSetSpec::Generated(GeneratorSpec::training(self.task, self.seed)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        EvolutionConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_configs() {
        let base = EvolutionConfig::default();
        let cases = [
            EvolutionConfig {
                population_size: 1,
                ..base.clone()
            },
            EvolutionConfig {
                eval_budget: 5,
                ..base.clone()
            },
            EvolutionConfig {
                operator_mix: 1.5,
                ..base.clone()
            },
            EvolutionConfig {
                ablation: Ablation {
                    disable_cs: true,
                    disable_ls: true,
                    disable_cpm: false,
                },
                ..base.clone()
            },
            EvolutionConfig {
                retries: 0,
                ..base.clone()
            },
            EvolutionConfig {
                instances: Some(InstanceSetSpec::Generated(GeneratorSpec::training(Task::Tsp, 0))),
                ..base.clone()
            },
        ];
        for c in cases {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn single_member_allowed_without_cs() {
        let c = EvolutionConfig {
            population_size: 1,
            eval_budget: 1,
            ablation: Ablation {
                disable_cs: true,
                ..Ablation::default()
            },
            ..EvolutionConfig::default()
        };
        c.validate().unwrap();
        assert_eq!(c.effective_mix(), 0.0);
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            task = "tsp"
            population_size = 4
            eval_budget = 20
            [ablation]
            disable_cpm = true
            [llm]
            mode = "live"
            model = "m"
            [worker]
            timeout_secs = 2.5
        "#;
        let c: EvolutionConfig = toml::from_str(text).unwrap();
        assert_eq!(c.task, Task::Tsp);
        assert!(c.ablation.disable_cpm);
        assert_eq!(c.worker.timeout_secs, 2.5);
        let LlmSpec::Live(chat) = &c.llm else { panic!("expected live") };
        assert_eq!(chat.model, "m");
        assert_eq!(chat.temperature, 1.0);
        let back: EvolutionConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
