//! Chat-completion backends: a canned mock and an OpenAI-style HTTP client.

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::prompt::Stage;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(c: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: c.into(),
        }
    }

    pub fn user(c: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: c.into(),
        }
    }

    pub fn assistant(c: impl Into<String>) -> Self {
        Self {
            role: "assistant".into(),
            content: c.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    Decode(String),
    #[error("backend config: {0}")]
    Config(String),
}

pub trait ChatBackend: Send + Sync {
    /// One completion for the conversation.
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, BackendError>;

    fn name(&self) -> String;
}

/// Reply text of a mock rule. `json` is sent as a fenced block; `text` is
/// sent verbatim (for malformed replies).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockReply {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl MockReply {
    pub fn json(v: Value) -> Self {
        Self {
            json: Some(v),
            text: None,
        }
    }

    pub fn text(t: impl Into<String>) -> Self {
        Self {
            json: None,
            text: Some(t.into()),
        }
    }

    fn render(&self) -> String {
        match (&self.json, &self.text) {
            (Some(v), _) => format!(
                "```json\n{}\n```",
                serde_json::to_string_pretty(v).expect("JSON value serializes")
            ),
            (None, Some(t)) => t.clone(),
            (None, None) => String::new(),
        }
    }
}

/// Matches the first user message of a conversation at one stage. The key
/// is lowercased with whitespace collapsed; `exact` compares the whole key,
/// `all` requires every fragment to appear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRule {
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub all: Vec<String>,
    /// Reply per attempt; the last one repeats.
    pub replies: Vec<MockReply>,
}

impl MockRule {
    fn matches(&self, stage: Stage, key: &str) -> bool {
        if self.stage != stage {
            return false;
        }
        if let Some(e) = &self.exact {
            return normalize(e) == key;
        }
        !self.all.is_empty() && self.all.iter().all(|f| key.contains(&normalize(f)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockTable {
    pub rules: Vec<MockRule>,
    #[serde(default = "default_fallback")]
    pub fallback: String,
}

fn default_fallback() -> String {
    "Sorry, I am not sure how to help with that.".into()
}

pub fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Canned backend. Deterministic: the reply depends only on the stage, the
/// first user message and the attempt number.
#[derive(Debug, Clone)]
pub struct MockBackend {
    table: MockTable,
    delay: Duration,
}

/// The built-in table covering the demo prompts and the benchmark suite.
pub const DEFAULT_MOCK_TABLE: &str = include_str!("../../data/mock_responses.json");

impl MockBackend {
    pub fn new(table: MockTable) -> Self {
        Self {
            table,
            delay: Duration::ZERO,
        }
    }

    pub fn builtin() -> Self {
        Self::new(serde_json::from_str(DEFAULT_MOCK_TABLE).expect("built-in mock table parses"))
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
        let table = serde_json::from_str(&text).map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
        Ok(Self::new(table))
    }

    /// Sleeps before every reply, to simulate a slow model.
    pub fn with_delay(mut self, d: Duration) -> Self {
        self.delay = d;
        self
    }

    /// Rules are tried in order before the built-in ones.
    pub fn with_rules_first(mut self, rules: Vec<MockRule>) -> Self {
        let mut r = rules;
        r.append(&mut self.table.rules);
        self.table.rules = r;
        self
    }

    pub fn table(&self) -> &MockTable {
        &self.table
    }
}

impl ChatBackend for MockBackend {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, BackendError> {
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        let stage = messages
            .iter()
            .find(|m| m.role == "system")
            .and_then(|m| Stage::detect(&m.content))
            .ok_or_else(|| BackendError::Decode("conversation carries no stage marker".into()))?;
        let mut users = messages.iter().filter(|m| m.role == "user");
        let key = normalize(&users.next().map(|m| m.content.clone()).unwrap_or_default());
        let attempt = users.count();
        Ok(self
            .table
            .rules
            .iter()
            .find(|r| r.matches(stage, &key))
            .and_then(|r| r.replies.get(attempt.min(r.replies.len().saturating_sub(1))))
            .map(MockReply::render)
            .unwrap_or_else(|| self.table.fallback.clone()))
    }

    fn name(&self) -> String {
        "mock".into()
    }
}

pub const DEFAULT_TIMEOUT_S: f64 = 120.0;
pub const DEFAULT_RETRIES: u32 = 2;

/// OpenAI-style `/chat/completions` client, temperature 0 by default.
#[derive(Debug, Clone)]
pub struct LiveBackend {
    url: String,
    model: String,
    temperature: f64,
    api_key: Option<String>,
    retries: u32,
    timeout: Duration,
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    n: u32,
    stream: bool,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

impl LiveBackend {
    pub fn new(
        endpoint: &str,
        model: &str,
        temperature: f64,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Result<Self, BackendError> {
        if endpoint.trim().is_empty() {
            return Err(BackendError::Config("live backend needs an endpoint URL".into()));
        }
        if model.trim().is_empty() {
            return Err(BackendError::Config("live backend needs a model name".into()));
        }
        let base = endpoint.trim_end_matches('/');
        let url = if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        };
        Ok(Self {
            url,
            model: model.to_string(),
            temperature,
            api_key,
            retries: DEFAULT_RETRIES,
            timeout,
        })
    }

    pub fn with_retries(mut self, n: u32) -> Self {
        self.retries = n;
        self
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn attempt(
        &self,
        client: &reqwest::blocking::Client,
        messages: &[ChatMessage],
    ) -> Result<String, (bool, BackendError)> {
        let body = CompletionRequest {
            model: &self.model,
            messages,
            temperature: self.temperature,
            n: 1,
            stream: false,
        };
        let mut req = client.post(&self.url).json(&body);
        if let Some(k) = &self.api_key {
            req = req.bearer_auth(k);
        }
        let resp = req.send().map_err(|e| {
            (
                true,
                BackendError::Transport {
                    attempts: 1,
                    message: e.to_string(),
                },
            )
        })?;
        let status = resp.status();
        if !status.is_success() {
            let retry = status.is_server_error() || status.as_u16() == 429;
            let body = resp.text().unwrap_or_default();
            return Err((
                retry,
                BackendError::Status {
                    status: status.as_u16(),
                    body: body.chars().take(500).collect(),
                },
            ));
        }
        let parsed: CompletionResponse = resp.json().map_err(|e| (false, BackendError::Decode(e.to_string())))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| (false, BackendError::Decode("response has no message content".into())))
    }
}

impl ChatBackend for LiveBackend {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, BackendError> {
        // Built per call so the client's internal runtime never lives in an async context.
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        let mut delay = Duration::from_millis(200);
        let mut k = 0;
        loop {
            match self.attempt(&client, messages) {
                Ok(s) => return Ok(s),
                Err((true, e)) if k < self.retries => {
                    log::warn!("completion attempt {} failed: {e}", k + 1);
                    std::thread::sleep(delay);
                    delay *= 2;
                    k += 1;
                }
                Err((_, BackendError::Transport { message, .. })) => {
                    return Err(BackendError::Transport {
                        attempts: k + 1,
                        message,
                    })
                }
                Err((_, e)) => return Err(e),
            }
        }
    }

    fn name(&self) -> String {
        format!("live:{}", self.model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Live,
}

/// Backend section of a config file. Environment variables override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub api_key: Option<String>,
    pub timeout_s: f64,
    pub retries: u32,
    /// Custom mock table; the built-in one when absent.
    pub mock_table: Option<String>,
    /// Artificial latency of the mock, milliseconds.
    pub mock_delay_ms: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            endpoint: "http://127.0.0.1:11434/v1".into(),
            model: "gemma2:9b".into(),
            temperature: 0.0,
            api_key: None,
            timeout_s: DEFAULT_TIMEOUT_S,
            retries: DEFAULT_RETRIES,
            mock_table: None,
            mock_delay_ms: 0,
        }
    }
}

pub const ENV_BACKEND: &str = "DTWIN_BACKEND";
pub const ENV_URL: &str = "DTWIN_BACKEND_URL";
pub const ENV_MODEL: &str = "DTWIN_MODEL";
pub const ENV_API_KEY: &str = "DTWIN_API_KEY";

impl BackendConfig {
    /// Applies `DTWIN_BACKEND`, `DTWIN_BACKEND_URL`, `DTWIN_MODEL` and
    /// `DTWIN_API_KEY` from `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), BackendError> {
        if let Some(k) = lookup(ENV_BACKEND) {
            self.kind = match k.trim().to_lowercase().as_str() {
                "mock" => BackendKind::Mock,
                "live" => BackendKind::Live,
                other => return Err(BackendError::Config(format!("{ENV_BACKEND}={other}: expected mock or live"))),
            };
        }
        if let Some(u) = lookup(ENV_URL) {
            self.endpoint = u;
        }
        if let Some(m) = lookup(ENV_MODEL) {
            self.model = m;
        }
        if let Some(k) = lookup(ENV_API_KEY) {
            self.api_key = Some(k);
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn ChatBackend>, BackendError> {
        match self.kind {
            BackendKind::Mock => {
                let m = match &self.mock_table {
                    Some(p) => MockBackend::load(Path::new(p))?,
                    None => MockBackend::builtin(),
                };
                Ok(Box::new(m.with_delay(Duration::from_millis(self.mock_delay_ms))))
            }
            BackendKind::Live => {
                if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
                    return Err(BackendError::Config(format!("timeout {} s must be positive", self.timeout_s)));
                }
                Ok(Box::new(
                    LiveBackend::new(
                        &self.endpoint,
                        &self.model,
                        self.temperature,
                        self.api_key.clone(),
                        Duration::from_secs_f64(self.timeout_s),
                    )?
                    .with_retries(self.retries),
                ))
            }
        }
    }
}
