//! Judge backends: an OpenAI-compatible chat-completions client and the
//! deterministic mocks used for testing and desk-scale runs.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::{JudgeBackendConfig, JudgeError};

/// Environment variable holding the bearer token for the HTTP backend.
pub const API_TOKEN_ENV: &str = "SEREN_API_TOKEN";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

/// Content hash of one message sequence as sent to a backend. Keys the
/// mock table and is stable across runs.
pub fn prompt_hash(messages: &[ChatMessage]) -> String {
    let mut hasher = Sha256::new();
    for message in messages {
        hasher.update(message.role.as_str().as_bytes());
        hasher.update([0x1f]);
        hasher.update(message.content.as_bytes());
        hasher.update([0x1e]);
    }
    hex::encode(hasher.finalize())
}

pub trait ChatBackend: Sync {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, JudgeError>;
    fn model_id(&self) -> &str;
}

// ── HTTP backend ────────────────────────────────────────────────────────────

pub struct HttpBackend {
    config: JudgeBackendConfig,
    client: reqwest::blocking::Client,
    token: Option<String>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

impl HttpBackend {
    /// Bearer token is read from [`API_TOKEN_ENV`]; requests go out
    /// unauthenticated when it is unset (local endpoints).
    pub fn new(config: JudgeBackendConfig) -> Result<Self, JudgeError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| JudgeError::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(Self {
            config,
            client,
            token: std::env::var(API_TOKEN_ENV).ok(),
        })
    }

    fn send_once(&self, messages: &[ChatMessage]) -> Result<String, SendFailure> {
        let payload = serde_json::json!({
            "model": self.config.model,
            "messages": messages
                .iter()
                .map(|m| serde_json::json!({"role": m.role.as_str(), "content": m.content}))
                .collect::<Vec<_>>(),
            "temperature": self.config.temperature,
        });
        let mut request = self.client.post(&self.config.endpoint).json(&payload);
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request.send().map_err(|e| SendFailure::Retryable(e.to_string()))?;
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(SendFailure::Retryable(format!("status {status}")));
        }
        if !status.is_success() {
            return Err(SendFailure::Fatal(format!("status {status}")));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| SendFailure::Malformed(e.to_string()))?;
        parsed
            .choices
            .first()
            .map(|c| c.message.content.clone())
            .ok_or_else(|| SendFailure::Malformed("no choices in response".into()))
    }
}

enum SendFailure {
    Retryable(String),
    Fatal(String),
    Malformed(String),
}

impl ChatBackend for HttpBackend {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, JudgeError> {
        let max_attempts = self.config.retry.max_attempts.max(1);
        let mut backoff = Duration::from_millis(self.config.retry.initial_backoff_ms);
        let mut last = String::new();
        for attempt in 1..=max_attempts {
            match self.send_once(messages) {
                Ok(text) => return Ok(text),
                Err(SendFailure::Malformed(m)) => return Err(JudgeError::BadPayload(m)),
                Err(SendFailure::Fatal(m)) => {
                    return Err(JudgeError::Transport { attempts: attempt, message: m })
                }
                Err(SendFailure::Retryable(m)) => {
                    last = m;
                    if attempt < max_attempts {
                        std::thread::sleep(backoff);
                        backoff *= 2;
                    }
                }
            }
        }
        Err(JudgeError::Transport {
            attempts: max_attempts,
            message: last,
        })
    }

    fn model_id(&self) -> &str {
        &self.config.model
    }
}

// ── Mock backends ───────────────────────────────────────────────────────────

/// What a table mock does on a missing prompt hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockFallback {
    /// Missing entries are an error.
    None,
    /// Every score fixed to this value.
    ConstScore(u8),
    /// Scores derived from the prompt hash, in 1..=5.
    HashScore,
}

/// Deterministic local backend: a table mapping prompt hashes to canned
/// response text, with optional constant or hash-derived fallbacks. With
/// a fixed table the whole judge pipeline is a pure function of its input.
pub struct MockBackend {
    model: String,
    table: HashMap<String, String>,
    fallback: MockFallback,
    calls: AtomicUsize,
}

impl MockBackend {
    pub fn new(model: impl Into<String>, fallback: MockFallback) -> Self {
        Self {
            model: model.into(),
            table: HashMap::new(),
            fallback,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn const_score(score: u8) -> Self {
        Self::new("mock-const", MockFallback::ConstScore(score))
    }

    pub fn hash_score() -> Self {
        Self::new("mock-hash", MockFallback::HashScore)
    }

    /// Table file: one JSON object per line, `{"key": <prompt hash>,
    /// "response": <text>}`.
    pub fn from_table_file(
        path: &Path,
        model: impl Into<String>,
        fallback: MockFallback,
    ) -> Result<Self, JudgeError> {
        #[derive(Deserialize)]
        struct Row {
            key: String,
            response: String,
        }
        let body = std::fs::read_to_string(path)
            .map_err(|e| JudgeError::Cache(format!("{}: {e}", path.display())))?;
        let mut mock = Self::new(model, fallback);
        for (idx, line) in body.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Row = serde_json::from_str(line).map_err(|e| {
                JudgeError::Cache(format!("{} line {}: {e}", path.display(), idx + 1))
            })?;
            mock.table.insert(row.key, row.response);
        }
        Ok(mock)
    }

    pub fn insert(&mut self, key: String, response: String) {
        self.table.insert(key, response);
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn hash_derived(hash: &str) -> String {
        let byte = |range: std::ops::Range<usize>| {
            u64::from_str_radix(&hash[range], 16).unwrap_or(0) % 5 + 1
        };
        let (relevance, unexpectedness, serendipity) = (byte(0..8), byte(8..16), byte(16..24));
        format!(
            "relevance: {relevance}\nunexpectedness: {unexpectedness}\nserendipity: {serendipity}"
        )
    }
}

impl ChatBackend for MockBackend {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, JudgeError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let key = prompt_hash(messages);
        if let Some(response) = self.table.get(&key) {
            return Ok(response.clone());
        }
        match self.fallback {
            MockFallback::None => Err(JudgeError::MissingTableEntry(key)),
            MockFallback::ConstScore(score) => Ok(format!(
                "relevance: {score}\nunexpectedness: {score}\nserendipity: {score}"
            )),
            MockFallback::HashScore => Ok(Self::hash_derived(&key)),
        }
    }

    fn model_id(&self) -> &str {
        &self.model
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msgs(content: &str) -> Vec<ChatMessage> {
        vec![ChatMessage::new(Role::User, content)]
    }

    #[test]
    fn prompt_hash_is_stable_and_role_sensitive() {
        let a = prompt_hash(&msgs("hello"));
        assert_eq!(a, prompt_hash(&msgs("hello")));
        assert_ne!(a, prompt_hash(&msgs("hello!")));
        assert_ne!(
            a,
            prompt_hash(&[ChatMessage::new(Role::System, "hello")])
        );
    }

    #[test]
    fn const_mock_emits_fixed_scores() {
        let mock = MockBackend::const_score(3);
        let text = mock.complete(&msgs("anything")).unwrap();
        assert!(text.contains("serendipity: 3"));
        assert_eq!(mock.call_count(), 1);
    }

    #[test]
    fn hash_mock_is_deterministic_and_in_range() {
        let mock = MockBackend::hash_score();
        let a = mock.complete(&msgs("p1")).unwrap();
        let b = mock.complete(&msgs("p1")).unwrap();
        assert_eq!(a, b);
        for text in [a, mock.complete(&msgs("p2")).unwrap()] {
            let last = text.lines().last().unwrap();
            let score: u8 = last.rsplit(": ").next().unwrap().parse().unwrap();
            assert!((1..=5).contains(&score));
        }
    }

    #[test]
    fn table_mock_hits_and_misses() {
        let mut mock = MockBackend::new("m", MockFallback::None);
        let key = prompt_hash(&msgs("p"));
        mock.insert(key, "serendipity: 5".into());
        assert_eq!(mock.complete(&msgs("p")).unwrap(), "serendipity: 5");
        assert!(matches!(
            mock.complete(&msgs("other")),
            Err(JudgeError::MissingTableEntry(_))
        ));
    }

    #[test]
    fn table_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.jsonl");
        let key = prompt_hash(&msgs("p"));
        std::fs::write(
            &path,
            format!("{}\n", serde_json::json!({"key": key, "response": "serendipity: 2"})),
        )
        .unwrap();
        let mock = MockBackend::from_table_file(&path, "m", MockFallback::None).unwrap();
        assert_eq!(mock.complete(&msgs("p")).unwrap(), "serendipity: 2");
    }
}
