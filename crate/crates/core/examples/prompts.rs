//! The init, diversity and local-search prompts for one task.
//!
//! cargo run --example prompts -- [task]

use eohs::domain::{Heuristic, HeuristicId, Origin, Task};
use eohs::llm::{build_prompt, PromptKind};
use eohs::problems::Builtin;

fn main() {
    let task: Task = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(Task::Obp);
    let rules: Vec<Heuristic> = Builtin::for_task(task)
        .enumerate()
        .map(|(i, b)| Heuristic::new(HeuristicId(i as u64 + 1), task, b.description(), b.reference_source(), Origin::Builtin, vec![]).unwrap())
        .collect();
    let pair = [rules[0].clone(), rules.get(1).unwrap_or(&rules[0]).clone()];
    for (kind, parents) in [(PromptKind::Init, &[][..]), (PromptKind::Cs, &pair[..]), (PromptKind::Ls, &pair[..1])] {
        let p = build_prompt(kind, task, parents).unwrap();
        println!("===== {kind:?} =====\n{}\n", p.text);
    }
}
