//! One initialization request to a chat-completions endpoint.
//!
//! EOHS_API_KEY=... cargo run --example live_llm -- [endpoint] [model]
//!
//! Without an API key the prompt is printed and nothing is sent.

use eohs::domain::Task;
use eohs::exec::Program;
use eohs::llm::{build_prompt, parse_reply, ChatClient, ChatConfig, PromptKind};

fn main() {
    let mut args = std::env::args().skip(1);
    let mut config = ChatConfig::default();
    if let Some(e) = args.next() {
        config.endpoint = e;
    }
    if let Some(m) = args.next() {
        config.model = m;
    }
    let prompt = build_prompt(PromptKind::Init, Task::Obp, &[]).unwrap();
    if std::env::var(&config.api_key_env).map_or(true, |k| k.is_empty()) {
        println!(
            "{} is not set; prompt that would be sent to {}:\n\n{}",
            config.api_key_env, config.endpoint, prompt.text
        );
        return;
    }
    let client = ChatClient::new(config).unwrap();
    let raw = match client.complete(&prompt.text) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("request failed: {e}");
            std::process::exit(2);
        }
    };
    match parse_reply(&raw) {
        Ok(reply) => {
            println!("thought: {}\n\n{}", reply.thought, reply.code);
            match Program::parse(&reply.code, Task::Obp) {
                Ok(_) => println!("runs in-process"),
                Err(e) => println!("needs a worker: {e}"),
            }
        }
        Err(e) => println!("unusable reply ({e}):\n{raw}"),
    }
}
