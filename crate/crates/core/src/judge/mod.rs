//! The LLM-as-a-judge system: prompt rendering for the four strategies,
//! backend transport (HTTP or deterministic mocks), verdict parsing, and
//! the append-only verdict cache.

mod backend;
mod bank;
mod cache;
mod parse;
mod runner;
mod template;

pub use backend::{
    prompt_hash, ChatBackend, ChatMessage, HttpBackend, MockBackend, MockFallback, Role,
    API_TOKEN_ENV,
};
pub use bank::{ExampleBank, FewShotExample};
pub use cache::VerdictCache;
pub use parse::parse_verdict;
pub use runner::{Judge, JudgeFailure, JudgeListReport, JudgedItem};
pub use template::{HistoryOrder, TemplateSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ItemRecord;

/// Maximum history length fed to the judge (the last-n behaviors, n = 10).
pub const MAX_HISTORY: usize = 10;

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("history is empty")]
    EmptyHistory,
    #[error("history too long: {0} items (max {MAX_HISTORY})")]
    HistoryTooLong(usize),
    #[error("invalid few-shot bank: {0}")]
    InvalidBank(String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("expected {expected} responses for {kind} prompts, got {got}")]
    ResponseCount {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("no parseable {0} score in response")]
    Unparseable(&'static str),
    #[error("{label} score out of range: {value}")]
    OutOfRange { label: &'static str, value: i64 },
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed endpoint payload: {0}")]
    BadPayload(String),
    #[error("mock table has no entry for prompt hash {0}")]
    MissingTableEntry(String),
    #[error("verdict cache failure: {0}")]
    Cache(String),
}

impl JudgeError {
    /// Backend-tier failures (transport, payload, missing mock entry) as
    /// opposed to parse or validation failures.
    pub fn is_backend(&self) -> bool {
        matches!(
            self,
            JudgeError::Transport { .. }
                | JudgeError::BadPayload(_)
                | JudgeError::MissingTableEntry(_)
        )
    }
}

/// The four prompt strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Base,
    Ls,
    Cot,
    Ltm,
}

impl PromptKind {
    pub const ALL: [PromptKind; 4] = [
        PromptKind::Base,
        PromptKind::Ls,
        PromptKind::Cot,
        PromptKind::Ltm,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PromptKind::Base => "base",
            PromptKind::Ls => "ls",
            PromptKind::Cot => "cot",
            PromptKind::Ltm => "ltm",
        }
    }

    /// Number of chained message sequences (LLM responses) per item.
    pub fn sequence_count(self) -> usize {
        match self {
            PromptKind::Ltm => 3,
            _ => 1,
        }
    }

    /// Whether verdicts of this kind carry relevance and unexpectedness
    /// sub-scores.
    pub fn has_subscores(self) -> bool {
        matches!(self, PromptKind::Cot | PromptKind::Ltm)
    }
}

impl std::str::FromStr for PromptKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base" => Ok(PromptKind::Base),
            "ls" => Ok(PromptKind::Ls),
            "cot" => Ok(PromptKind::Cot),
            "ltm" => Ok(PromptKind::Ltm),
            other => Err(format!("unknown prompt kind: {other}")),
        }
    }
}

impl std::fmt::Display for PromptKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One judging request: the user's recent history (1..=10 items), the
/// candidate item, and the prompt strategy.
#[derive(Debug, Clone)]
pub struct JudgeRequest {
    pub user_id: String,
    pub history: Vec<ItemRecord>,
    pub candidate: ItemRecord,
    pub kind: PromptKind,
}

impl JudgeRequest {
    pub fn new(
        user_id: String,
        history: Vec<ItemRecord>,
        candidate: ItemRecord,
        kind: PromptKind,
    ) -> Result<Self, JudgeError> {
        if history.is_empty() {
            return Err(JudgeError::EmptyHistory);
        }
        if history.len() > MAX_HISTORY {
            return Err(JudgeError::HistoryTooLong(history.len()));
        }
        Ok(Self {
            user_id,
            history,
            candidate,
            kind,
        })
    }
}

/// A parsed judge output: the five-level serendipity score plus the
/// relevance/unexpectedness sub-scores for the stepwise prompt kinds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JudgeVerdict {
    pub serendipity: u8,
    pub relevance: Option<u8>,
    pub unexpectedness: Option<u8>,
    pub raw_responses: Vec<String>,
    pub model_id: String,
    pub kind: PromptKind,
}

/// Transport policy for the HTTP backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        // Transport errors are transient; parse failures are never retried.
        Self {
            max_attempts: 3,
            initial_backoff_ms: 1000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeBackendConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for JudgeBackendConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: String::new(),
            temperature: 0.0,
            max_in_flight: 1,
            retry: RetryPolicy::default(),
        }
    }
}
