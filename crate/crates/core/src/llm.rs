//! Client for an external text-generation endpoint.
//!
//! Wire contract: `POST {url}` with JSON `{"prompt": ..., "max_tokens": ...}`,
//! answered by `{"text": ...}`. Timeouts, connection failures and 5xx replies
//! are retried with exponential backoff; 4xx replies fail at once.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::synthesis::Rewriter;

pub const API_KEY_ENV: &str = "FORGE_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    /// Versioned id, e.g. `desc-rewrite/v1`.
    pub id: String,
    /// Text with `{name}` placeholders; `{{` and `}}` are literal braces.
    pub body: String,
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, body: impl Into<String>) -> Self {
        PromptTemplate {
            id: id.into(),
            body: body.into(),
        }
    }

    pub fn placeholders(&self) -> Vec<String> {
        let mut out = Vec::new();
        scan(&self.body, |piece| {
            if let Piece::Placeholder(name) = piece {
                if !out.iter().any(|n| n == name) {
                    out.push(name.to_string());
                }
            }
        });
        out
    }
}

enum Piece<'a> {
    Text(&'a str),
    Placeholder(&'a str),
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn scan<'a>(body: &'a str, mut f: impl FnMut(Piece<'a>)) {
    let mut rest = body;
    while let Some(pos) = rest.find(['{', '}']) {
        f(Piece::Text(&rest[..pos]));
        let tail = &rest[pos..];
        if let Some(after) = tail.strip_prefix("{{") {
            f(Piece::Text("{"));
            rest = after;
        } else if let Some(after) = tail.strip_prefix("}}") {
            f(Piece::Text("}"));
            rest = after;
        } else if let Some(inner) = tail.strip_prefix('{') {
            match inner.find('}') {
                Some(end) if is_ident(&inner[..end]) => {
                    f(Piece::Placeholder(&inner[..end]));
                    rest = &inner[end + 1..];
                }
                _ => {
                    f(Piece::Text("{"));
                    rest = &tail[1..];
                }
            }
        } else {
            f(Piece::Text("}"));
            rest = &tail[1..];
        }
    }
    f(Piece::Text(rest));
}

/// Substitutes every `{name}` in the template body. Values are inserted verbatim.
pub fn build_prompt(template: &PromptTemplate, fields: &HashMap<&str, String>) -> Result<String> {
    let mut out = String::with_capacity(template.body.len());
    let mut missing = None;
    scan(&template.body, |piece| match piece {
        Piece::Text(t) => out.push_str(t),
        Piece::Placeholder(name) => match fields.get(name) {
            Some(v) => out.push_str(v),
            None => {
                missing.get_or_insert_with(|| name.to_string());
            }
        },
    });
    match missing {
        Some(name) => Err(ForgeError::UnboundPlaceholder(name)),
        None => Ok(out),
    }
}

/// Prompt shipped for rewriting templated layered descriptions.
pub fn desc_rewrite_template() -> PromptTemplate {
    PromptTemplate::new(
        "desc-rewrite/v1",
        "You are given the scene graph of an image and its objects grouped into depth layers, \
from nearest to farthest.\n\nScene graph triplets:\n{scene_graph}\n\nLayered draft:\n{layers}\n\n\
Rewrite the draft as a fluent spatial layout description. Keep one section per layer, each starting \
with \"Layer k:\". Mention every object and every relation of the draft using the same words. \
Do not add objects or relations.",
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub url: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    #[serde(skip)]
    pub auth_token: Option<String>,
    /// First retry delay; doubled on every further retry.
    pub backoff_ms: u64,
    pub max_tokens: u32,
    /// Upper bound on in-flight requests in batch mode.
    pub concurrency: usize,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            url: String::new(),
            timeout_ms: 30_000,
            max_retries: 3,
            auth_token: None,
            backoff_ms: 250,
            max_tokens: 1024,
            concurrency: 4,
        }
    }
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>) -> Self {
        EndpointConfig {
            url: url.into(),
            ..Default::default()
        }
    }

    /// Picks up the bearer token from `FORGE_LLM_API_KEY` when set.
    pub fn with_env_token(mut self) -> Self {
        self.auth_token = std::env::var(API_KEY_ENV).ok().filter(|t| !t.is_empty());
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, message: String| Err(ForgeError::InvalidParameter { name, message });
        if self.url.is_empty() {
            return bad("llm.url", "must not be empty".into());
        }
        if self.timeout_ms == 0 {
            return bad("llm.timeout_ms", "must be > 0".into());
        }
        if self.concurrency == 0 {
            return bad("llm.concurrency", "must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    prompt: &'a str,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct CompletionResponse {
    text: String,
}

enum Attempt {
    Retryable(String),
    Fatal(String),
}

pub struct LlmClient {
    cfg: EndpointConfig,
    http: reqwest::blocking::Client,
}

impl LlmClient {
    pub fn new(cfg: EndpointConfig) -> Result<Self> {
        cfg.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| ForgeError::Llm {
                attempts: 0,
                message: format!("building http client: {e}"),
            })?;
        Ok(LlmClient { cfg, http })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }

    fn attempt(&self, prompt: &str) -> std::result::Result<String, Attempt> {
        let mut req = self.http.post(&self.cfg.url).json(&CompletionRequest {
            prompt,
            max_tokens: self.cfg.max_tokens,
        });
        if let Some(token) = &self.cfg.auth_token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() || e.is_connect() || e.is_request() {
                Attempt::Retryable(e.to_string())
            } else {
                Attempt::Fatal(e.to_string())
            }
        })?;
        let status = resp.status();
        if status.is_server_error() {
            return Err(Attempt::Retryable(format!("server returned {status}")));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(format!("endpoint returned {status}")));
        }
        resp.json::<CompletionResponse>()
            .map(|r| r.text)
            .map_err(|e| {
                if e.is_timeout() {
                    Attempt::Retryable(e.to_string())
                } else {
                    Attempt::Fatal(format!("malformed response: {e}"))
                }
            })
    }

    /// Sends `prompt`, retrying transient failures up to `max_retries` times.
    pub fn complete(&self, prompt: &str) -> Result<String> {
        let mut delay = Duration::from_millis(self.cfg.backoff_ms);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(prompt) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(message)) => return Err(ForgeError::Llm { attempts, message }),
                Err(Attempt::Retryable(message)) => {
                    if attempts > self.cfg.max_retries {
                        return Err(ForgeError::Llm { attempts, message });
                    }
                    log::warn!("llm attempt {attempts} failed ({message}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                    delay = delay.saturating_mul(2);
                }
            }
        }
    }

    /// Completes every prompt with at most `concurrency` requests in flight.
    /// Result `i` always belongs to prompt `i`.
    pub fn complete_many(&self, prompts: &[String]) -> Vec<Result<String>> {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<String>>>> = prompts.iter().map(|_| Mutex::new(None)).collect();
        let workers = self.cfg.concurrency.min(prompts.len()).max(1);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(prompt) = prompts.get(i) else { break };
                    let r = self.complete(prompt);
                    *slots[i].lock().expect("slot lock") = Some(r);
                });
            }
        });
        slots
            .into_iter()
            .map(|m| m.into_inner().expect("slot lock").expect("every slot filled"))
            .collect()
    }
}

/// One-shot completion against `cfg`.
pub fn complete(cfg: &EndpointConfig, prompt: &str) -> Result<String> {
    LlmClient::new(cfg.clone())?.complete(prompt)
}

impl Rewriter for LlmClient {
    fn rewrite(&self, prompt: &str) -> Result<String> {
        self.complete(prompt)
    }
}
