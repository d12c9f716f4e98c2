//! Command implementations and the filesystem layout shared between them.

pub mod calibrate;
pub mod evaluate;
pub mod ingest;
pub mod judge;
pub mod recommend;
pub mod split;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use seren_core::corpus::{read_normalized, Catalog, Interaction, ItemRecord};
use seren_core::judge::{
    ChatBackend, ExampleBank, HistoryOrder, HttpBackend, Judge, JudgeBackendConfig, MockBackend,
    MockFallback, RetryPolicy, TemplateSet, VerdictCache,
};

use crate::config::RunConfig;
use crate::error::CliError;

pub fn normalized_dir(out: &Path) -> PathBuf {
    out.join("normalized")
}

pub fn fold_dir(out: &Path, fold: usize) -> PathBuf {
    out.join("folds").join(format!("fold_{fold}"))
}

pub fn reclist_path(out: &Path, model: &str, fold: usize) -> PathBuf {
    out.join("reclists").join(model).join(format!("fold_{fold}.tsv"))
}

pub fn load_normalized(out: &Path) -> Result<(Catalog, Vec<Interaction>), CliError> {
    read_normalized(&normalized_dir(out)).map_err(|e| {
        CliError::data(format!(
            "cannot read normalized dataset under {} (run `seren ingest` first): {e}",
            out.display()
        ))
    })
}

pub struct FoldFiles {
    pub train: Vec<Interaction>,
    pub validation: Vec<Interaction>,
    pub test: Vec<Interaction>,
}

pub fn load_fold(out: &Path, fold: usize) -> Result<FoldFiles, CliError> {
    let dir = fold_dir(out, fold);
    let part = |name: &str| {
        seren_core::split::read_fold_part(&dir.join(name)).map_err(|e| {
            CliError::data(format!(
                "cannot read fold {fold} (run `seren split` first): {e}"
            ))
        })
    };
    Ok(FoldFiles {
        train: part("train.tsv")?,
        validation: part("valid.tsv")?,
        test: part("test.tsv")?,
    })
}

/// Model directories under `reclists/`, sorted for determinism. Includes
/// imported lists.
pub fn reclist_models(out: &Path) -> Result<Vec<String>, CliError> {
    let dir = out.join("reclists");
    if !dir.exists() {
        return Err(CliError::data(format!(
            "no rec lists under {} (run `seren recommend` first)",
            out.display()
        )));
    }
    let mut models: Vec<String> = std::fs::read_dir(&dir)?
        .filter_map(|entry| entry.ok())
        .filter(|entry| entry.path().is_dir())
        .filter_map(|entry| entry.file_name().into_string().ok())
        .collect();
    models.sort();
    Ok(models)
}

pub fn build_backend(cfg: &RunConfig) -> Result<Box<dyn ChatBackend>, CliError> {
    let backend: Box<dyn ChatBackend> = match cfg.backend.kind.as_str() {
        "http" => Box::new(HttpBackend::new(JudgeBackendConfig {
            endpoint: cfg.backend.endpoint.clone(),
            model: cfg.backend.model.clone(),
            temperature: cfg.backend.temperature,
            max_in_flight: cfg.backend.max_in_flight,
            retry: RetryPolicy {
                max_attempts: cfg.backend.retry_max_attempts,
                initial_backoff_ms: cfg.backend.retry_backoff_ms,
            },
        })?),
        "mock-table" => Box::new(MockBackend::from_table_file(
            Path::new(&cfg.backend.table_path),
            if cfg.backend.model.is_empty() { "mock-table" } else { &cfg.backend.model },
            MockFallback::None,
        )?),
        "mock-const" => Box::new(MockBackend::const_score(cfg.backend.const_score)),
        "mock-hash" => Box::new(MockBackend::hash_score()),
        other => return Err(CliError::usage(format!("unknown backend kind: {other}"))),
    };
    Ok(backend)
}

pub fn build_judge<'a>(
    cfg: &RunConfig,
    backend: &'a dyn ChatBackend,
    cache: &'a VerdictCache,
) -> Result<Judge<'a>, CliError> {
    let templates = if cfg.judge.templates_dir.is_empty() {
        TemplateSet::default()
    } else {
        TemplateSet::from_dir(Path::new(&cfg.judge.templates_dir))?
    };
    let bank = if cfg.judge.bank_path.is_empty() {
        ExampleBank::default_bank()
    } else {
        ExampleBank::from_file(Path::new(&cfg.judge.bank_path))?
    };
    let order = match cfg.judge.history_order.as_str() {
        "newest_first" => HistoryOrder::NewestFirst,
        _ => HistoryOrder::OldestFirst,
    };
    Ok(Judge::new(backend, cache)
        .with_templates(templates)
        .with_bank(bank)
        .with_history_order(order)
        .with_max_in_flight(cfg.backend.max_in_flight))
}

/// Last-n positive history of every list user, as catalog records.
/// Users with no resolvable history are absent from the map.
pub fn histories_for_users<'a>(
    users: impl Iterator<Item = &'a str>,
    train: &[Interaction],
    catalog: &Catalog,
    history_len: usize,
) -> HashMap<String, Vec<ItemRecord>> {
    let mut histories = HashMap::new();
    for user in users {
        let ids = seren_core::corpus::build_history(train, user, history_len, i64::MAX);
        let records: Vec<ItemRecord> = ids
            .iter()
            .filter_map(|id| catalog.get(id))
            .cloned()
            .collect();
        if !records.is_empty() {
            histories.insert(user.to_string(), records);
        }
    }
    histories
}
