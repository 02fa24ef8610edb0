use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Generator, LlmError, PromptBundle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChatConfig {
    /// Full URL of the chat-completions route.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token; unset or empty
    /// variable means no `Authorization` header.
    pub api_key_env: String,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    pub timeout_secs: f64,
    /// Attempts in total, including the first.
    pub attempts: usize,
    /// First backoff delay; doubles after every failed attempt.
    pub backoff_ms: u64,
}

impl Default for ChatConfig {
    fn default() -> Self {
        ChatConfig {
            endpoint: "https://api.deepseek.com/chat/completions".into(),
            model: "deepseek-chat".into(),
            api_key_env: "EOHS_API_KEY".into(),
            temperature: 1.0,
            max_tokens: None,
            timeout_secs: 120.0,
            attempts: 4,
            backoff_ms: 1000,
        }
    }
}

/// Blocking client for OpenAI-compatible chat-completions endpoints.
pub struct ChatClient {
    config: ChatConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

enum Attempt {
    Retry(String),
    Fatal(LlmError),
}

impl ChatClient {
    pub fn new(config: ChatConfig) -> Result<Self, LlmError> {
        if config.attempts == 0 {
            return Err(LlmError::Config("attempts must be at least 1".into()));
        }
        if !(config.timeout_secs > 0.0 && config.timeout_secs.is_finite()) {
            return Err(LlmError::Config(format!("timeout {} must be positive", config.timeout_secs)));
        }
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(ChatClient { config, api_key, agent })
    }

    pub fn config(&self) -> &ChatConfig {
        &self.config
    }

    fn body(&self, prompt: &str) -> serde_json::Value {
        let mut body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        });
        if let Some(m) = self.config.max_tokens {
            body["max_tokens"] = json!(m);
        }
        body
    }

    fn attempt(&self, body: &str) -> Result<String, Attempt> {
        let mut req = self
            .agent
            .post(&self.config.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send(body).map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        match status {
            200..=299 => {}
            408 | 429 | 500..=599 => return Err(Attempt::Retry(format!("HTTP {status}"))),
            _ => {
                return Err(Attempt::Fatal(LlmError::Rejected {
                    status,
                    body: text.chars().take(500).collect(),
                }))
            }
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Attempt::Fatal(LlmError::Malformed(e.to_string())))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Attempt::Fatal(LlmError::Malformed("no choices[0].message.content".into())))
    }

    /// Sends `prompt` as a single user message and returns the reply text.
    pub fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let body = self.body(prompt).to_string();
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut last = String::new();
        for attempt in 1..=self.config.attempts {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(reason)) => {
                    log::warn!("chat attempt {attempt}/{} failed: {reason}", self.config.attempts);
                    last = reason;
                }
            }
            if attempt < self.config.attempts {
                thread::sleep(delay);
                delay *= 2;
            }
        }
        Err(LlmError::Transport {
            attempts: self.config.attempts,
            reason: last,
        })
    }
}

impl Generator for ChatClient {
    fn generate(&self, prompt: &PromptBundle, _seed: u64) -> Result<String, LlmError> {
        self.complete(&prompt.text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    /// Serves the given (status, body) pairs in order, one per connection,
    /// recording request bodies.
    fn serve(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&seen);
        thread::spawn(move || {
            for (status, body) in replies {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream);
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                log.lock().unwrap().push(String::from_utf8(buf).unwrap());
                let mut stream = reader.into_inner();
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (url, seen)
    }

    fn config(url: String) -> ChatConfig {
        ChatConfig {
            endpoint: url,
            model: "test-model".into(),
            api_key_env: "EOHS_TEST_KEY_UNSET".into(),
            timeout_secs: 5.0,
            attempts: 4,
            backoff_ms: 10,
            ..ChatConfig::default()
        }
    }

    fn ok_body(content: &str) -> String {
        json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
    }

    #[test]
    fn retries_rate_limits_then_succeeds() {
        let mut replies = vec![(429, "{}".to_string()); 3];
        replies.push((200, ok_body("{{t}} def priority(item, bins): return bins")));
        let (url, seen) = serve(replies);
        let client = ChatClient::new(config(url)).unwrap();
        let text = client.complete("hello").unwrap();
        assert!(text.starts_with("{{t}}"));
        let seen = seen.lock().unwrap();
        assert_eq!(seen.len(), 4);
        let body: serde_json::Value = serde_json::from_str(&seen[0]).unwrap();
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["messages"][0]["content"], "hello");
        assert_eq!(body["temperature"], 1.0);
    }

    #[test]
    fn gives_up_after_the_last_attempt() {
        let (url, _) = serve(vec![(503, "{}".to_string()); 2]);
        let client = ChatClient::new(ChatConfig {
            attempts: 2,
            ..config(url)
        })
        .unwrap();
        assert!(matches!(client.complete("x"), Err(LlmError::Transport { attempts: 2, .. })));
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, seen) = serve(vec![(401, "nope".to_string())]);
        let client = ChatClient::new(config(url)).unwrap();
        assert!(matches!(client.complete("x"), Err(LlmError::Rejected { status: 401, .. })));
        assert_eq!(seen.lock().unwrap().len(), 1);
    }

    #[test]
    fn malformed_completion() {
        let (url, _) = serve(vec![(200, "{\"choices\": []}".to_string())]);
        let client = ChatClient::new(config(url)).unwrap();
        assert!(matches!(client.complete("x"), Err(LlmError::Malformed(_))));
    }
}
