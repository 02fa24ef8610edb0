use std::fmt;

use crate::domain::Task;

use super::{Decider, Decision, DecisionError, DecisionQuery};

/// Hand-written reference heuristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    FirstFit,
    BestFit,
    TspNearest,
    CvrpNearestFeasible,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [
        Builtin::FirstFit,
        Builtin::BestFit,
        Builtin::TspNearest,
        Builtin::CvrpNearestFeasible,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::FirstFit => "first_fit",
            Builtin::BestFit => "best_fit",
            Builtin::TspNearest => "tsp_nearest",
            Builtin::CvrpNearestFeasible => "cvrp_nearest_feasible",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn task(self) -> Task {
        match self {
            Builtin::FirstFit | Builtin::BestFit => Task::Obp,
            Builtin::TspNearest => Task::Tsp,
            Builtin::CvrpNearestFeasible => Task::Cvrp,
        }
    }

    pub fn for_task(task: Task) -> impl Iterator<Item = Builtin> {
        Builtin::ALL.into_iter().filter(move |b| b.task() == task)
    }

    pub fn description(self) -> &'static str {
        match self {
            Builtin::FirstFit => "Place the item in the lowest-index bin that can hold it.",
            Builtin::BestFit => "Place the item in the bin that leaves the least remaining capacity.",
            Builtin::TspNearest => "Move to the closest unvisited node.",
            Builtin::CvrpNearestFeasible => {
                "Move to the closest unvisited customer whose demand fits, else return to the depot."
            }
        }
    }

    /// Python source implementing the same rule against the task template.
    pub fn reference_source(self) -> &'static str {
        match self {
            Builtin::FirstFit => {
                "import numpy as np\n\
                 def priority(item: float, bins: np.ndarray) -> np.ndarray:\n    \
                 return -np.arange(len(bins))\n"
            }
            Builtin::BestFit => {
                "import numpy as np\n\
                 def priority(item: float, bins: np.ndarray) -> np.ndarray:\n    \
                 return -(bins - item)\n"
            }
            Builtin::TspNearest => {
                "import numpy as np\n\
                 def select_next_node(current_node: int, destination_node: int, unvisited_nodes: np.ndarray, distance_matrix: np.ndarray) -> int:\n    \
                 distances = distance_matrix[current_node][unvisited_nodes]\n    \
                 return unvisited_nodes[np.argmin(distances)]\n"
            }
            Builtin::CvrpNearestFeasible => {
                "import numpy as np\n\
                 def select_next_node(current_node: int, depot: int, unvisited_nodes: np.ndarray, rest_capacity: np.ndarray, demands: np.ndarray, distance_matrix: np.ndarray) -> int:\n    \
                 distances = distance_matrix[current_node][unvisited_nodes]\n    \
                 feasible = demands[unvisited_nodes] <= rest_capacity\n    \
                 scores = np.where(feasible, distances, np.inf)\n    \
                 return np.where(np.min(scores) < np.inf, unvisited_nodes[np.argmin(scores)], depot)\n"
            }
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn argmin_by<F: Fn(usize) -> f64>(nodes: &[usize], key: F) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &u in nodes {
        let k = key(u);
        if best.is_none_or(|(_, bk)| k < bk) {
            best = Some((u, k));
        }
    }
    best.map(|(u, _)| u)
}

impl Decider for Builtin {
    fn decide(&self, query: &DecisionQuery<'_>) -> Result<Decision, DecisionError> {
        match (self, query) {
            (Builtin::FirstFit, DecisionQuery::Obp { bins, .. }) => {
                Ok(Decision::Priorities((0..bins.len()).map(|i| -(i as f64)).collect()))
            }
            (Builtin::BestFit, DecisionQuery::Obp { item, bins }) => {
                Ok(Decision::Priorities(bins.iter().map(|r| -(r - item)).collect()))
            }
            (
                Builtin::TspNearest,
                DecisionQuery::Tsp {
                    current,
                    unvisited,
                    distances,
                    ..
                },
            ) => argmin_by(unvisited, |u| distances.get(*current, u))
                .map(|u| Decision::Node(u as i64))
                .ok_or_else(|| DecisionError("no unvisited nodes".into())),
            (
                Builtin::CvrpNearestFeasible,
                DecisionQuery::Cvrp {
                    current,
                    depot,
                    unvisited,
                    rest_capacity,
                    demands,
                    distances,
                },
            ) => {
                let feasible: Vec<usize> = unvisited
                    .iter()
                    .copied()
                    .filter(|&u| demands[u] <= *rest_capacity)
                    .collect();
                let node = argmin_by(&feasible, |u| distances.get(*current, u)).unwrap_or(*depot);
                Ok(Decision::Node(node as i64))
            }
            (b, _) => Err(DecisionError(format!("{b} cannot answer this query"))),
        }
    }
}
