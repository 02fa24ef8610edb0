//! Prompt construction, reply parsing and text generators (a chat-completions
//! client and an offline mock).

mod chat;
mod mock;
mod prompts;

pub use chat::{ChatClient, ChatConfig};
pub use mock::MockGenerator;
pub use prompts::{build_prompt, task_description, task_template, PromptBundle, PromptKind};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("{kind:?} prompt needs {expected} parent(s), got {got}")]
    ParentCount {
        kind: PromptKind,
        expected: usize,
        got: usize,
    },
    #[error("no-thought")]
    NoThought,
    #[error("no-code")]
    NoCode,
    #[error("empty reply")]
    Empty,
    #[error("request failed after {attempts} attempt(s): {reason}")]
    Transport { attempts: usize, reason: String },
    #[error("endpoint rejected the request ({status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed completion: {0}")]
    Malformed(String),
    #[error("configuration: {0}")]
    Config(String),
}

/// A generator reply split into its description and code.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorReply {
    pub raw: String,
    pub thought: String,
    pub code: String,
}

/// Something that turns a prompt into reply text. `seed` identifies the
/// call so that seeded generators are independent of call order.
pub trait Generator: Send + Sync {
    fn generate(&self, prompt: &PromptBundle, seed: u64) -> Result<String, LlmError>;
}

impl<G: Generator + ?Sized> Generator for Box<G> {
    fn generate(&self, prompt: &PromptBundle, seed: u64) -> Result<String, LlmError> {
        (**self).generate(prompt, seed)
    }
}

fn first_braced(raw: &str) -> Option<&str> {
    let start = raw.find("{{")? + 2;
    let len = raw[start..].find("}}")?;
    Some(&raw[start..start + len])
}

/// Bodies of all fenced blocks, in order. The opening fence's info string
/// (e.g. `python`) is dropped.
fn fenced_blocks(raw: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = raw;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                out.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => break,
        }
    }
    out
}

/// Extracts the thought (first `{{...}}`) and the code (first fenced block
/// holding a function definition, else everything from the first `def`
/// line on).
pub fn parse_reply(raw: &str) -> Result<GeneratorReply, LlmError> {
    if raw.trim().is_empty() {
        return Err(LlmError::Empty);
    }
    let thought = first_braced(raw).map(str::trim).filter(|t| !t.is_empty()).ok_or(LlmError::NoThought)?;
    let code = fenced_blocks(raw)
        .into_iter()
        .find(|b| b.lines().any(|l| l.trim_start().starts_with("def ")))
        .map(str::to_string)
        .or_else(|| {
            let mut offset = 0;
            for line in raw.split_inclusive('\n') {
                if line.starts_with("def ") {
                    return Some(raw[offset..].trim_end_matches("```").to_string());
                }
                offset += line.len();
            }
            None
        })
        .ok_or(LlmError::NoCode)?;
    let code = code.trim_matches('\n').trim_end().to_string();
    if code.is_empty() {
        return Err(LlmError::NoCode);
    }
    Ok(GeneratorReply {
        raw: raw.to_string(),
        thought: thought.to_string(),
        code: code + "\n",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenced_reply() {
        let raw = "{{Greedy best fit}}\n```\ndef priority(item, bins):\n    return -bins\n```\n";
        let r = parse_reply(raw).unwrap();
        assert_eq!(r.thought, "Greedy best fit");
        assert_eq!(r.code, "def priority(item, bins):\n    return -bins\n");
    }

    #[test]
    fn language_tag_and_first_thought_win() {
        let raw = "Sure. {{ first }} and {{second}}\n```python\nimport numpy as np\ndef priority(item, bins):\n    return bins\n```\n```python\ndef other(): pass\n```";
        let r = parse_reply(raw).unwrap();
        assert_eq!(r.thought, "first");
        assert!(r.code.starts_with("import numpy as np\ndef priority"));
        assert!(!r.code.contains("other"));
    }

    #[test]
    fn unfenced_code_falls_back_to_def_scan() {
        let raw = "{{t}}\nHere it is:\ndef priority(item, bins):\n    return bins\n";
        assert_eq!(parse_reply(raw).unwrap().code, "def priority(item, bins):\n    return bins\n");
    }

    #[test]
    fn failures() {
        assert_eq!(parse_reply("just prose"), Err(LlmError::NoThought));
        assert_eq!(parse_reply("{{idea}} but no code at all"), Err(LlmError::NoCode));
        assert_eq!(parse_reply("{{idea}}\n```\nprint(1)\n```"), Err(LlmError::NoCode));
        assert_eq!(parse_reply("  "), Err(LlmError::Empty));
        assert_eq!(LlmError::NoCode.to_string(), "no-code");
    }
}
