//! Offline generator. It renders weighted-feature heuristics whose weights
//! come from a per-call seeded RNG. Local search perturbs a parent's weights;
//! the diversity operator blends two parents and moves away from both.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::domain::{make_dedupe_key, Heuristic, Task};
use crate::instances::instance_seed;

use super::{Generator, LlmError, PromptBundle, PromptKind};

struct Feature {
    /// Range of the initial uniform draw.
    init: (f64, f64),
    /// Allowed range after perturbation, if bounded.
    clamp: Option<(f64, f64)>,
}

const fn free(lo: f64, hi: f64) -> Feature {
    Feature {
        init: (lo, hi),
        clamp: None,
    }
}

const OBP_FEATURES: [Feature; 6] = [
    free(0.0, 1.5),
    free(-1.0, 1.0),
    free(-0.5, 0.5),
    free(-1.0, 1.0),
    free(-1.0, 1.0),
    Feature {
        init: (0.05, 1.0),
        clamp: Some((0.01, 2.0)),
    },
];
const TSP_FEATURES: [Feature; 4] = [free(0.5, 1.5), free(-0.6, 0.6), free(-0.6, 0.6), free(-0.4, 0.4)];
const CVRP_FEATURES: [Feature; 5] = [
    free(0.5, 1.5),
    free(-0.6, 0.6),
    free(-0.5, 0.5),
    free(-0.3, 0.3),
    free(-0.3, 0.3),
];

fn features(task: Task) -> &'static [Feature] {
    match task {
        Task::Obp => &OBP_FEATURES,
        Task::Tsp => &TSP_FEATURES,
        Task::Cvrp => &CVRP_FEATURES,
    }
}

fn weight_lines(w: &[f64]) -> String {
    w.iter()
        .enumerate()
        .map(|(k, v)| format!("    w_{k} = {v:.4}\n"))
        .collect()
}

fn render_code(task: Task, w: &[f64]) -> String {
    let weights = weight_lines(w);
    match task {
        Task::Obp => format!(
            "import numpy as np\n\n\
             def priority(item: float, bins: np.ndarray) -> np.ndarray:\n\
             {weights}    \
             r = bins - item\n    \
             s = w_0 * (-r)\n    \
             s += w_1 * np.log1p(np.maximum(r, 0))\n    \
             s += w_2 * (-np.arange(len(bins)))\n    \
             s += w_3 * np.where(r < w_5 * item, 1.0, 0.0)\n    \
             s += w_4 * (item / bins)\n    \
             return s\n"
        ),
        Task::Tsp => format!(
            "import numpy as np\n\n\
             def select_next_node(current_node: int, destination_node: int, unvisited_nodes: np.ndarray, distance_matrix: np.ndarray) -> int:\n\
             {weights}    \
             d = distance_matrix[current_node][unvisited_nodes]\n    \
             back = distance_matrix[destination_node][unvisited_nodes]\n    \
             spread = np.mean(distance_matrix[unvisited_nodes][:, unvisited_nodes], axis=1)\n    \
             s = w_0 * d + w_1 * back + w_2 * spread + w_3 * np.sqrt(d)\n    \
             return unvisited_nodes[np.argmin(s)]\n"
        ),
        Task::Cvrp => format!(
            "import numpy as np\n\n\
             def select_next_node(current_node: int, depot: int, unvisited_nodes: np.ndarray, rest_capacity: np.ndarray, demands: np.ndarray, distance_matrix: np.ndarray) -> int:\n\
             {weights}    \
             d = distance_matrix[current_node][unvisited_nodes]\n    \
             home = distance_matrix[depot][unvisited_nodes]\n    \
             dem = demands[unvisited_nodes]\n    \
             s = w_0 * d + w_1 * home + w_2 * dem / (rest_capacity + 1) + w_3 * (rest_capacity - dem) / (rest_capacity + 1) + w_4 * np.sqrt(d)\n    \
             s = np.where(dem <= rest_capacity, s, np.inf)\n    \
             return np.where(np.min(s) < np.inf, unvisited_nodes[np.argmin(s)], depot)\n"
        ),
    }
}

fn render_thought(task: Task, kind: PromptKind) -> &'static str {
    match (task, kind) {
        (Task::Obp, PromptKind::Init) => "Score each feasible bin by a weighted mix of leftover space, log slack, bin order, a tight-fit bonus and the item-to-space ratio.",
        (Task::Obp, PromptKind::Cs) => "Blend two bin scoring rules and push the weights away from both to cover different item size regimes.",
        (Task::Obp, PromptKind::Ls) => "Retune the bin scoring weights of the given rule with small perturbations.",
        (Task::Tsp, PromptKind::Init) => "Pick the unvisited node minimising a weighted mix of distance from the current node, distance to the start and how far it sits from the remaining nodes.",
        (Task::Tsp, PromptKind::Cs) => "Blend two node scoring rules and shift the weights away from both.",
        (Task::Tsp, PromptKind::Ls) => "Retune the node scoring weights of the given rule with small perturbations.",
        (Task::Cvrp, PromptKind::Init) => "Among customers that fit, pick the one minimising a weighted mix of travel distance, distance from the depot and load use; return to the depot when none fit.",
        (Task::Cvrp, PromptKind::Cs) => "Blend two customer scoring rules and shift the weights away from both.",
        (Task::Cvrp, PromptKind::Ls) => "Retune the customer scoring weights of the given rule with small perturbations.",
    }
}

/// Reads `w_k = value` assignments back out of mock-rendered code.
fn parse_weights(code: &str, expected: usize) -> Option<Vec<f64>> {
    let mut w = vec![None; expected];
    for line in code.lines() {
        let line = line.trim();
        let Some(rest) = line.strip_prefix("w_") else { continue };
        let (k, v) = rest.split_once('=')?;
        let k: usize = k.trim().parse().ok()?;
        let v: f64 = v.trim().parse().ok()?;
        *w.get_mut(k)? = Some(v);
    }
    w.into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct MockGenerator {
    seed: u64,
}

impl MockGenerator {
    pub fn new(seed: u64) -> Self {
        MockGenerator { seed }
    }

    fn fresh(task: Task, rng: &mut ChaCha8Rng) -> Vec<f64> {
        features(task).iter().map(|f| rng.random_range(f.init.0..f.init.1)).collect()
    }

    fn clamp(task: Task, w: &mut [f64]) {
        for (v, f) in w.iter_mut().zip(features(task)) {
            if let Some((lo, hi)) = f.clamp {
                *v = v.clamp(lo, hi);
            }
        }
    }

    fn perturb(task: Task, base: &[f64], scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let noise = Normal::new(0.0, scale).expect("positive scale");
        let mut w: Vec<f64> = base.iter().map(|v| v + noise.sample(rng)).collect();
        Self::clamp(task, &mut w);
        w
    }

    fn weights(&self, prompt: &PromptBundle, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let task = prompt.task;
        let n = features(task).len();
        let parents: Vec<Vec<f64>> = prompt
            .parents
            .iter()
            .filter_map(|p| parse_weights(&p.code, n))
            .collect();
        match (prompt.kind, parents.as_slice()) {
            (PromptKind::Ls, [p]) => Self::perturb(task, p, 0.15, rng),
            (PromptKind::Cs, [a, b]) => {
                let t: f64 = rng.random_range(0.0..1.0);
                let blend: Vec<f64> = a.iter().zip(b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
                Self::perturb(task, &blend, 0.35, rng)
            }
            _ => Self::fresh(task, rng),
        }
    }
}

impl Generator for MockGenerator {
    fn generate(&self, prompt: &PromptBundle, seed: u64) -> Result<String, LlmError> {
        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(self.seed, seed as usize));
        let task = prompt.task;
        let parent_keys: Vec<_> = prompt.parents.iter().map(|p: &Heuristic| p.dedupe_key.clone()).collect();
        let mut w = self.weights(prompt, &mut rng);
        let mut code = render_code(task, &w);
        // rounding can reproduce a parent exactly; nudge until it differs
        while parent_keys.contains(&make_dedupe_key(&code)) {
            w = Self::perturb(task, &w, 0.05, &mut rng);
            code = render_code(task, &w);
        }
        Ok(format!(
            "{{{{{}}}}}\n\n```python\n{}```\n",
            render_thought(task, prompt.kind),
            code
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{HeuristicId, Origin};
    use crate::exec::Program;
    use crate::instances::{generate as gen_instances, GeneratorSpec};
    use crate::llm::{build_prompt, parse_reply};
    use crate::problems::evaluate;
    use std::collections::HashSet;

    fn heuristic(id: u64, task: Task, raw: &str) -> Heuristic {
        let r = parse_reply(raw).unwrap();
        Heuristic::new(HeuristicId(id), task, r.thought, r.code, Origin::Init, vec![]).unwrap()
    }

    #[test]
    fn deterministic_per_seed() {
        let g = MockGenerator::new(1);
        let p = build_prompt(PromptKind::Init, Task::Obp, &[]).unwrap();
        assert_eq!(g.generate(&p, 0).unwrap(), g.generate(&p, 0).unwrap());
        assert_ne!(g.generate(&p, 0).unwrap(), g.generate(&p, 1).unwrap());
        assert_ne!(g.generate(&p, 0).unwrap(), MockGenerator::new(2).generate(&p, 0).unwrap());
    }

    #[test]
    fn output_parses_and_runs_for_every_task() {
        let g = MockGenerator::new(9);
        for task in [Task::Obp, Task::Tsp, Task::Cvrp] {
            let p = build_prompt(PromptKind::Init, task, &[]).unwrap();
            let instances = gen_instances(&GeneratorSpec::small(task, 4, 3)).unwrap();
            for call in 0..10 {
                let h = heuristic(call, task, &g.generate(&p, call).unwrap());
                let program = Program::parse(&h.code, task).unwrap();
                for inst in &instances {
                    let r = evaluate(&program, inst);
                    assert!(r.is_valid(), "{task} call {call}: {:?}\n{}", r.violation, h.code);
                }
            }
        }
    }

    #[test]
    fn offspring_differ_from_parents() {
        let g = MockGenerator::new(4);
        for task in [Task::Obp, Task::Tsp, Task::Cvrp] {
            let init = build_prompt(PromptKind::Init, task, &[]).unwrap();
            let a = heuristic(1, task, &g.generate(&init, 1).unwrap());
            let b = heuristic(2, task, &g.generate(&init, 2).unwrap());
            for call in 0..50 {
                let cs = build_prompt(PromptKind::Cs, task, &[a.clone(), b.clone()]).unwrap();
                let child = heuristic(3, task, &g.generate(&cs, 100 + call).unwrap());
                assert_ne!(child.dedupe_key, a.dedupe_key);
                assert_ne!(child.dedupe_key, b.dedupe_key);
                let ls = build_prompt(PromptKind::Ls, task, &[a.clone()]).unwrap();
                let child = heuristic(4, task, &g.generate(&ls, 200 + call).unwrap());
                assert_ne!(child.dedupe_key, a.dedupe_key);
            }
        }
    }

    #[test]
    fn local_search_stays_near_the_parent() {
        let g = MockGenerator::new(4);
        let init = build_prompt(PromptKind::Init, Task::Tsp, &[]).unwrap();
        let a = heuristic(1, Task::Tsp, &g.generate(&init, 1).unwrap());
        let wa = parse_weights(&a.code, 4).unwrap();
        let ls = build_prompt(PromptKind::Ls, Task::Tsp, &[a]).unwrap();
        let child = parse_reply(&g.generate(&ls, 5).unwrap()).unwrap();
        let wc = parse_weights(&child.code, 4).unwrap();
        let dist: f64 = wa.iter().zip(&wc).map(|(x, y)| (x - y).abs()).sum();
        assert!(dist > 0.0 && dist < 2.0, "{dist}");
    }

    #[test]
    fn diversity_floor() {
        let g = MockGenerator::new(11);
        for task in [Task::Obp, Task::Tsp, Task::Cvrp] {
            let p = build_prompt(PromptKind::Init, task, &[]).unwrap();
            let keys: HashSet<_> = (0..1000)
                .map(|c| make_dedupe_key(&parse_reply(&g.generate(&p, c).unwrap()).unwrap().code))
                .collect();
            assert!(keys.len() >= 50, "{task}: {}", keys.len());
        }
    }
}
