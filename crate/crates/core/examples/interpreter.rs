//! Running heuristic source in-process and comparing it to a built-in.
//!
//! cargo run --release --example interpreter

use eohs::domain::Task;
use eohs::exec::Program;
use eohs::instances::{generate, GeneratorSpec};
use eohs::problems::{evaluate, Builtin};

const TIGHT_FIT: &str = r#"import numpy as np
def priority(item, bins):
    residual = bins - item
    bonus = np.where(residual < 0.05 * np.max(bins), 10.0, 0.0)
    return bonus - residual
"#;

fn main() {
    let instances = generate(&GeneratorSpec::small(Task::Obp, 6, 4)).unwrap();
    let program = Program::parse(TIGHT_FIT, Task::Obp).unwrap();
    let reference = Program::parse(Builtin::BestFit.reference_source(), Task::Obp).unwrap();
    println!("{:<10} {:>8} {:>10} {:>10}", "instance", "items", "best fit", "tight fit");
    for inst in &instances {
        let a = evaluate(&Builtin::BestFit, inst);
        assert_eq!(a, evaluate(&reference, inst));
        let b = evaluate(&program, inst);
        println!("{:<10} {:>8} {:>10} {:>10}", inst.id(), inst.payload().size(), a.raw, b.raw);
    }
    match Program::parse("def priority(item, bins):\n    while True:\n        pass\n", Task::Obp) {
        Ok(_) => unreachable!(),
        Err(e) => println!("\nloops are left to workers: {e}"),
    }
}
