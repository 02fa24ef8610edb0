//! The line-delimited JSON protocol spoken by evaluation workers, driven
//! in memory against the reference worker.
//!
//! cargo run --example worker_protocol

use eohs::domain::{Payload, Task};
use eohs::exec::protocol::{Request, WirePayload};
use eohs::exec::worker::serve;
use eohs::problems::Builtin;

fn main() {
    let requests = [
        Request::Ping { id: 1 },
        Request::Load {
            id: 2,
            code: Builtin::BestFit.reference_source().to_string(),
        },
        Request::Eval {
            id: 3,
            task: Task::Obp,
            payload: WirePayload::from(&Payload::obp(10.0, vec![6.0, 5.0, 4.0, 3.0])),
        },
    ];
    let mut input = String::new();
    for r in &requests {
        input.push_str(&serde_json::to_string(r).unwrap());
        input.push('\n');
    }
    input.push_str("not json\n");
    let mut output = Vec::new();
    serve(input.as_bytes(), &mut output).unwrap();
    for (req, resp) in input.lines().zip(String::from_utf8(output).unwrap().lines()) {
        println!("> {req}\n< {resp}");
    }
}
