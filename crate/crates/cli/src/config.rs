//! Run configuration: a declarative TOML file plus flag overrides. Every
//! command writes the resolved snapshot beside its outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub split: SplitConfig,
    pub judge: JudgeConfig,
    pub backend: BackendConfig,
    pub recommend: RecommendConfig,
    pub eval: EvalConfig,
    pub run: RunSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: String,
    pub format: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub threshold: u8,
    pub folds: Vec<usize>,
    pub negative_ratio: f64,
    pub min_user_interactions: usize,
    pub min_item_interactions: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            threshold: 4,
            folds: vec![0, 1, 2],
            negative_ratio: 1.0,
            min_user_interactions: 0,
            min_item_interactions: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JudgeConfig {
    pub prompt: String,
    pub history_len: usize,
    pub history_order: String,
    pub templates_dir: String,
    pub bank_path: String,
    pub exclude_bank_users: bool,
    /// Prompt kinds judged by `calibrate` (one report row each).
    pub calibrate_prompts: Vec<String>,
    pub question_columns: Vec<String>,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        Self {
            prompt: "cot".into(),
            history_len: 10,
            history_order: "oldest_first".into(),
            templates_dir: String::new(),
            bank_path: String::new(),
            exclude_bank_users: false,
            calibrate_prompts: vec!["base".into(), "ls".into(), "cot".into(), "ltm".into()],
            question_columns: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: String,
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_in_flight: usize,
    pub retry_max_attempts: u32,
    pub retry_backoff_ms: u64,
    pub table_path: String,
    pub const_score: u8,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: "mock-hash".into(),
            endpoint: String::new(),
            model: String::new(),
            temperature: 0.0,
            max_in_flight: 1,
            retry_max_attempts: 3,
            retry_backoff_ms: 1000,
            table_path: String::new(),
            const_score: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecommendConfig {
    pub models: Vec<String>,
    pub k: usize,
    pub tune_trials: usize,
    pub save_checkpoints: bool,
    pub fixed: FixedParams,
    /// External lists to install: `name:fold:path`.
    pub imports: Vec<String>,
}

impl Default for RecommendConfig {
    fn default() -> Self {
        Self {
            models: vec!["popularity".into()],
            k: 20,
            tune_trials: 0,
            save_checkpoints: false,
            fixed: FixedParams::default(),
            imports: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedParams {
    pub dim: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub epochs: usize,
    pub lambda: f64,
    pub k_neighbors: usize,
}

impl Default for FixedParams {
    fn default() -> Self {
        Self {
            dim: 32,
            learning_rate: 0.05,
            regularization: 0.01,
            epochs: 30,
            lambda: 1.0,
            k_neighbors: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k: usize,
    pub recall_k: usize,
    pub ser_threshold: u8,
    pub population: String,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k: 20,
            recall_k: 10,
            ser_threshold: 4,
            population: "train".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub out: String,
    pub cache: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 42,
            out: "out".into(),
            cache: "cache/verdicts.jsonl".into(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&body).map_err(|e| format!("bad config {}: {e}", path.display()))
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(&self.run.out)
    }

    pub fn cache_path(&self) -> PathBuf {
        PathBuf::from(&self.run.cache)
    }

    /// Write the resolved snapshot beside the outputs, for provenance.
    pub fn write_snapshot(&self, out_dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let body = toml::to_string_pretty(self)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        std::fs::write(out_dir.join("config.resolved.toml"), body)
    }
}
