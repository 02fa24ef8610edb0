//! Reference worker: answers protocol frames using the in-process
//! evaluator. Code outside the supported dialect fails to load here; the
//! Python shim accepts arbitrary code.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use crate::domain::{InstanceMeta, ProblemInstance, Task};
use crate::problems::evaluate;

use super::interp::{InterpError, Program};
use super::protocol::{Request, Response, BAD_FRAME, NO_HEURISTIC};

#[derive(Default)]
struct State {
    programs: Option<HashMap<Task, Result<Program, InterpError>>>,
}

impl State {
    fn load(&mut self, code: &str) -> Result<(), String> {
        let parsed: HashMap<Task, Result<Program, InterpError>> = [Task::Obp, Task::Tsp, Task::Cvrp]
            .into_iter()
            .map(|t| (t, Program::parse(code, t)))
            .collect();
        let any_ok = parsed.values().any(Result::is_ok);
        let err = if any_ok {
            None
        } else {
            // report the error of the task whose function name appears
            let task = if code.contains("def priority") { Task::Obp } else { Task::Cvrp };
            let tsp = parsed[&Task::Tsp].as_ref().err().map(ToString::to_string);
            let own = parsed[&task].as_ref().err().map(ToString::to_string);
            own.filter(|e| !e.contains("parameters")).or(tsp)
        };
        self.programs = Some(parsed);
        match err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    fn eval(&self, id: u64, task: Task, payload: super::protocol::WirePayload) -> Response {
        let Some(programs) = &self.programs else {
            return Response::err(Some(id), NO_HEURISTIC);
        };
        let program = match &programs[&task] {
            Ok(p) => p,
            Err(e) => return Response::err(Some(id), e.to_string()),
        };
        let instance = match payload
            .into_payload(task)
            .and_then(|p| ProblemInstance::new("wire", p, 1.0, InstanceMeta::generated()).map_err(|e| e.to_string()))
        {
            Ok(i) => i,
            Err(e) => return Response::err(Some(id), format!("bad-payload: {e}")),
        };
        let r = evaluate(program, &instance);
        if let Some(v) = r.violation {
            return Response::err(Some(id), v);
        }
        Response {
            raw: Some(r.raw),
            trace: Some(r.trace),
            decisions: Some(r.decisions),
            detours: Some(r.detours),
            ..Response::ok(id)
        }
    }

    fn handle(&mut self, line: &str) -> Response {
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(_) => return Response::err(None, BAD_FRAME),
        };
        let Some(id) = value.get("id").and_then(serde_json::Value::as_u64) else {
            return Response::err(None, BAD_FRAME);
        };
        match value.get("op").and_then(serde_json::Value::as_str) {
            Some("load" | "eval" | "ping") => {}
            Some(op) => return Response::err(Some(id), format!("unknown op `{op}`")),
            None => return Response::err(Some(id), BAD_FRAME),
        }
        let request: Request = match serde_json::from_value(value) {
            Ok(r) => r,
            Err(_) => return Response::err(Some(id), BAD_FRAME),
        };
        match request {
            Request::Ping { id } => Response::ok(id),
            Request::Load { id, code } => match self.load(&code) {
                Ok(()) => Response::ok(id),
                Err(e) => Response::err(Some(id), e),
            },
            Request::Eval { id, task, payload } => self.eval(id, task, payload),
        }
    }
}

/// Serves frames until `input` reaches end of file.
pub fn serve<R: BufRead, W: Write>(input: R, mut output: W) -> io::Result<()> {
    let mut state = State::default();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = state.handle(&line);
        serde_json::to_writer(&mut output, &response)?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Builtin;

    fn run(frames: &[String]) -> Vec<Response> {
        let input = frames.join("\n");
        let mut out = Vec::new();
        serve(input.as_bytes(), &mut out).unwrap();
        String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    }

    #[test]
    fn ping_and_protocol_errors() {
        let out = run(&[
            r#"{"id":1,"op":"ping"}"#.into(),
            r#"{"id":2,"op":"eval","task":"obp","payload":{"capacity":10,"items":[3]}}"#.into(),
            "not json".into(),
            r#"{"id":4,"op":"fly"}"#.into(),
            r#"{"id":5,"op":"load"}"#.into(),
        ]);
        assert_eq!(out.len(), 5);
        assert_eq!(out[0], Response::ok(1));
        assert_eq!(out[1].error.as_deref(), Some(NO_HEURISTIC));
        assert_eq!(out[2], Response::err(None, BAD_FRAME));
        assert_eq!(out[3].id, Some(4));
        assert!(!out[3].ok);
        assert_eq!(out[4], Response::err(Some(5), BAD_FRAME));
    }

    #[test]
    fn load_then_eval_returns_trace() {
        let load = serde_json::to_string(&Request::Load {
            id: 1,
            code: Builtin::BestFit.reference_source().into(),
        })
        .unwrap();
        let out = run(&[
            load,
            r#"{"id":2,"op":"eval","task":"obp","payload":{"capacity":10,"items":[6,5,4,3]}}"#.into(),
            r#"{"id":3,"op":"eval","task":"tsp","payload":{"coords":[[0,0],[1,1]]}}"#.into(),
        ]);
        assert!(out[0].ok);
        assert_eq!(out[1].raw, Some(2.0));
        assert_eq!(out[1].trace.as_deref(), Some(&[0, 1, 0, 1][..]));
        assert!(!out[2].ok);
    }

    #[test]
    fn bad_code_fails_to_load() {
        let load = serde_json::to_string(&Request::Load {
            id: 7,
            code: "def priority(item, bins):\n    while True:\n        pass\n".into(),
        })
        .unwrap();
        let out = run(&[load]);
        assert!(!out[0].ok);
        assert!(out[0].error.as_deref().unwrap().contains("unsupported"));
    }
}
