use serde::{Deserialize, Serialize};

use crate::domain::{Heuristic, Task};

use super::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Init,
    Cs,
    Ls,
}

impl PromptKind {
    pub fn parent_count(self) -> usize {
        match self {
            PromptKind::Init => 0,
            PromptKind::Cs => 2,
            PromptKind::Ls => 1,
        }
    }
}

/// A rendered prompt together with what it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub kind: PromptKind,
    pub task: Task,
    pub text: String,
    pub parents: Vec<Heuristic>,
}

pub fn task_description(task: Task) -> &'static str {
    match task {
        Task::Obp => "Implement a function that returns the priority with which we want to add an item to each bin.",
        Task::Tsp => {
            "Given a set of nodes with their coordinates, you need to find the shortest route that visits each node \
             once and returns to the starting node. The task can be solved step-by-step by starting from the current \
             node and iteratively choosing the next node. Help me design a novel algorithm that is different from the \
             algorithms in literature to select the next node in each step."
        }
        Task::Cvrp => {
            "Given a set of customers and a fleet of vehicles with limited capacity, the task is to design a novel \
             algorithm to select the next node in each step, with the objective of minimizing the total cost."
        }
    }
}

const OBP_TEMPLATE: &str = r#"import numpy as np
def priority(item: float, bins: np.ndarray) -> np.ndarray:
    """Returns priority with which we want to add item to each bin.
    Args:
        item: Size of item to be added to the bin.
        bins: Array of capacities for each bin.
    Return:
        Array of same size as bins with priority score of each bin.
    """
    return item - bins"#;

const TSP_TEMPLATE: &str = r#"import numpy as np
def select_next_node(current_node: int, destination_node: int, unvisited_nodes: np.ndarray, distance_matrix: np.ndarray) -> int:
    """
    Design a novel algorithm to select the next node in each step.

    Args:
    current_node: ID of the current node.
    destination_node: ID of the destination node.
    unvisited_nodes: Array of IDs of unvisited nodes.
    distance_matrix: Distance matrix of nodes.

    Return:
    ID of the next node to visit.
    """
    next_node = unvisited_nodes[0]
    return next_node"#;

const CVRP_TEMPLATE: &str = r#"import numpy as np
def select_next_node(current_node: int, depot: int, unvisited_nodes: np.ndarray, rest_capacity: np.ndarray, demands: np.ndarray, distance_matrix: np.ndarray) -> int:
    """Design a novel algorithm to select the next node in each step.
    Args:
        current_node: ID of the current node.
        depot: ID of the depot.
        unvisited_nodes: Array of IDs of unvisited nodes.
        rest_capacity: rest capacity of vehicle
        demands: demands of nodes
        distance_matrix: Distance matrix of nodes.
    Return:
        ID of the next node to visit.
    """
    best_score = -1
    next_node = -1
    for node in unvisited_nodes:
        demand = demands[node]
        distance = distance_matrix[current_node][node]
        if demand <= rest_capacity:
            score = demand / distance
            if score > best_score:
                best_score = score
                next_node = node
    return next_node"#;

/// The function skeleton shown to the model.
pub fn task_template(task: Task) -> &'static str {
    match task {
        Task::Obp => OBP_TEMPLATE,
        Task::Tsp => TSP_TEMPLATE,
        Task::Cvrp => CVRP_TEMPLATE,
    }
}

const THOUGHT_INSTRUCTION: &str =
    "First, describe your new algorithm and main steps in one sentence. The description must be inside within boxed {{}}.";
const CS_INSTRUCTION: &str = "These algorithms are effective for solving different instance distributions. \
                              Please help me create a new algorithm that is different from the given ones.";
const LS_INSTRUCTION: &str = "Please assist me in creating an improved version of the algorithm provided.";

fn render_heuristic(out: &mut String, index: Option<usize>, h: &Heuristic) {
    match index {
        Some(i) => out.push_str(&format!("No. {i} algorithm and the corresponding code are:\n")),
        None => out.push_str("Algorithm description and code:\n"),
    }
    out.push_str(h.thought.trim());
    out.push('\n');
    out.push_str(h.code.trim_end());
    out.push('\n');
}

/// Renders the prompt for `kind`. Deterministic in its inputs.
pub fn build_prompt(kind: PromptKind, task: Task, parents: &[Heuristic]) -> Result<PromptBundle, LlmError> {
    if parents.len() != kind.parent_count() {
        return Err(LlmError::ParentCount {
            kind,
            expected: kind.parent_count(),
            got: parents.len(),
        });
    }
    let mut text = String::new();
    text.push_str(task_description(task));
    text.push_str("\n\n");
    match kind {
        PromptKind::Init => {}
        PromptKind::Cs => {
            text.push_str("I have 2 existing algorithms with their codes as follows:\n");
            for (i, p) in parents.iter().enumerate() {
                render_heuristic(&mut text, Some(i + 1), p);
            }
            text.push('\n');
            text.push_str(CS_INSTRUCTION);
            text.push_str("\n\n");
        }
        PromptKind::Ls => {
            text.push_str("I have one algorithm with its code as follows:\n");
            render_heuristic(&mut text, None, &parents[0]);
            text.push('\n');
            text.push_str(LS_INSTRUCTION);
            text.push_str("\n\n");
        }
    }
    text.push_str(THOUGHT_INSTRUCTION);
    text.push_str("\n\nNext, implement the following Python function:\n");
    text.push_str(task_template(task));
    text.push_str("\n\nDo not give additional explanations.");
    Ok(PromptBundle {
        kind,
        task,
        text,
        parents: parents.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{HeuristicId, Origin};
    use crate::exec::Program;

    fn h(id: u64, task: Task, thought: &str, code: &str) -> Heuristic {
        Heuristic::new(HeuristicId(id), task, thought, code, Origin::Init, vec![]).unwrap()
    }

    #[test]
    fn init_prompt_carries_task_and_template() {
        let p = build_prompt(PromptKind::Init, Task::Obp, &[]).unwrap();
        assert!(p.text.contains("priority with which we want to add an item"));
        assert!(p.text.contains("def priority(item: float, bins: np.ndarray) -> np.ndarray:"));
        assert!(p.text.contains("boxed {{}}"));
        assert!(p.text.ends_with("Do not give additional explanations."));
        assert_eq!(p, build_prompt(PromptKind::Init, Task::Obp, &[]).unwrap());
    }

    #[test]
    fn cs_prompt_embeds_both_parents() {
        let a = h(1, Task::Tsp, "go near", "def select_next_node(a, b, c, d):\n    return c[0]\n");
        let b = h(2, Task::Tsp, "go far", "def select_next_node(a, b, c, d):\n    return c[-1]\n");
        let p = build_prompt(PromptKind::Cs, Task::Tsp, &[a.clone(), b.clone()]).unwrap();
        for x in [&a, &b] {
            assert!(p.text.contains(x.code.trim_end()));
            assert!(p.text.contains(&x.thought));
        }
        assert!(p.text.contains("different from the given ones"));
        assert!(p.text.contains("different instance distributions"));
    }

    #[test]
    fn ls_prompt_embeds_one_parent() {
        let a = h(1, Task::Cvrp, "t", "def select_next_node(a, b, c, d, e, f):\n    return c[0]\n");
        let p = build_prompt(PromptKind::Ls, Task::Cvrp, &[a]).unwrap();
        assert_eq!(p.text.matches("def select_next_node").count(), 2, "parent plus template");
        assert!(p.text.contains("improved version of the algorithm provided"));
    }

    #[test]
    fn wrong_parent_count() {
        assert!(build_prompt(PromptKind::Ls, Task::Obp, &[]).is_err());
        assert!(build_prompt(PromptKind::Init, Task::Obp, &[h(1, Task::Obp, "", "def priority(i, b):\n    return b\n")]).is_err());
    }

    #[test]
    fn straight_line_templates_are_interpretable() {
        for task in [Task::Obp, Task::Tsp] {
            Program::parse(task_template(task), task).unwrap();
        }
    }
}
