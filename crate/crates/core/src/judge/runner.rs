//! The judge runner: cache-first item judging and list judging with a
//! bounded number of in-flight requests.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::template::fill_previous;
use super::{
    parse_verdict, prompt_hash, ChatBackend, ChatMessage, ExampleBank, HistoryOrder, JudgeError,
    JudgeRequest, JudgeVerdict, PromptKind, TemplateSet, VerdictCache,
};
use crate::corpus::ItemRecord;

pub struct Judge<'a> {
    backend: &'a dyn ChatBackend,
    cache: &'a VerdictCache,
    templates: TemplateSet,
    bank: ExampleBank,
    history_order: HistoryOrder,
    max_in_flight: usize,
}

/// Error marker for one item whose judging failed.
#[derive(Debug, Clone)]
pub struct JudgeFailure {
    pub message: String,
    /// Transport-tier (retry-exhausted) as opposed to parse-tier.
    pub backend: bool,
}

/// Outcome for one recommended item: a verdict or an error marker.
#[derive(Debug, Clone)]
pub struct JudgedItem {
    pub item_id: String,
    pub verdict: Result<JudgeVerdict, JudgeFailure>,
}

/// Per-list judging report, items in recommendation order.
#[derive(Debug, Clone)]
pub struct JudgeListReport {
    pub user_id: String,
    pub items: Vec<JudgedItem>,
    pub parse_failures: usize,
    pub backend_failures: usize,
}

impl<'a> Judge<'a> {
    pub fn new(backend: &'a dyn ChatBackend, cache: &'a VerdictCache) -> Self {
        Self {
            backend,
            cache,
            templates: TemplateSet::default(),
            bank: ExampleBank::default_bank(),
            history_order: HistoryOrder::OldestFirst,
            max_in_flight: 1,
        }
    }

    pub fn with_templates(mut self, templates: TemplateSet) -> Self {
        self.templates = templates;
        self
    }

    pub fn with_bank(mut self, bank: ExampleBank) -> Self {
        self.bank = bank;
        self
    }

    pub fn with_history_order(mut self, order: HistoryOrder) -> Self {
        self.history_order = order;
        self
    }

    pub fn with_max_in_flight(mut self, cap: usize) -> Self {
        self.max_in_flight = cap.max(1);
        self
    }

    pub fn bank(&self) -> &ExampleBank {
        &self.bank
    }

    pub fn render(&self, request: &JudgeRequest) -> Result<Vec<Vec<ChatMessage>>, JudgeError> {
        self.templates.render(request, &self.bank, self.history_order)
    }

    /// Cache key: hash of model, kind, and the rendered prompt text of all
    /// sequences with the chaining slots still unfilled, so it is known
    /// before any backend call.
    pub fn cache_key(&self, request: &JudgeRequest) -> Result<String, JudgeError> {
        let sequences = self.render(request)?;
        Ok(cache_key_for(self.backend.model_id(), request.kind, &sequences))
    }

    /// Cache-only lookup: the verdict if this exact request was judged
    /// before, without touching the backend.
    pub fn cached(&self, request: &JudgeRequest) -> Result<Option<JudgeVerdict>, JudgeError> {
        Ok(self.cache.get(&self.cache_key(request)?))
    }

    /// Judge one item: serve from the cache when possible, otherwise
    /// render, send, parse, and store. LtM performs its three calls
    /// sequentially, threading each response into the next prompt.
    pub fn judge_item(&self, request: &JudgeRequest) -> Result<JudgeVerdict, JudgeError> {
        let sequences = self.render(request)?;
        let key = cache_key_for(self.backend.model_id(), request.kind, &sequences);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit);
        }

        let mut responses: Vec<String> = Vec::with_capacity(sequences.len());
        for (step, sequence) in sequences.iter().enumerate() {
            let outgoing = if step == 0 {
                sequence.clone()
            } else {
                fill_previous(sequence, &responses[step - 1])
            };
            match self.backend.complete(&outgoing) {
                Ok(text) => responses.push(text),
                Err(err) => {
                    // Keep whatever partial responses exist for inspection.
                    self.cache.put_failure(
                        &key,
                        request.kind,
                        self.backend.model_id(),
                        &responses,
                        &err.to_string(),
                    )?;
                    return Err(err);
                }
            }
        }

        match parse_verdict(request.kind, &responses, self.backend.model_id()) {
            Ok(verdict) => {
                self.cache.put(&key, &verdict)?;
                Ok(verdict)
            }
            Err(err) => {
                self.cache.put_failure(
                    &key,
                    request.kind,
                    self.backend.model_id(),
                    &responses,
                    &err.to_string(),
                )?;
                Err(err)
            }
        }
    }

    /// Judge every item of a recommendation list, order preserved. Items
    /// whose judging failed carry an error marker; only a cache-storage
    /// failure aborts the whole list.
    pub fn judge_list(
        &self,
        user_id: &str,
        history: &[ItemRecord],
        candidates: &[ItemRecord],
        kind: PromptKind,
    ) -> Result<JudgeListReport, JudgeError> {
        let requests: Vec<JudgeRequest> = candidates
            .iter()
            .map(|candidate| {
                JudgeRequest::new(user_id.to_string(), history.to_vec(), candidate.clone(), kind)
            })
            .collect::<Result<_, _>>()?;

        let slots: Mutex<Vec<Option<JudgedItem>>> = Mutex::new(vec![None; requests.len()]);
        let fatal: Mutex<Option<JudgeError>> = Mutex::new(None);
        let next = AtomicUsize::new(0);
        let workers = self.max_in_flight.min(requests.len()).max(1);

        let work = |_: usize| loop {
            if fatal.lock().expect("fatal lock").is_some() {
                return;
            }
            let idx = next.fetch_add(1, Ordering::SeqCst);
            if idx >= requests.len() {
                return;
            }
            let request = &requests[idx];
            let judged = match self.judge_item(request) {
                Ok(verdict) => JudgedItem {
                    item_id: request.candidate.item_id.clone(),
                    verdict: Ok(verdict),
                },
                Err(err @ JudgeError::Cache(_)) => {
                    *fatal.lock().expect("fatal lock") = Some(err);
                    return;
                }
                Err(err) => JudgedItem {
                    item_id: request.candidate.item_id.clone(),
                    verdict: Err(JudgeFailure {
                        message: err.to_string(),
                        backend: err.is_backend(),
                    }),
                },
            };
            slots.lock().expect("slots lock")[idx] = Some(judged);
        };

        if workers <= 1 {
            work(0);
        } else {
            std::thread::scope(|scope| {
                for w in 0..workers {
                    scope.spawn(move || work(w));
                }
            });
        }

        if let Some(err) = fatal.into_inner().expect("fatal lock") {
            return Err(err);
        }
        let items: Vec<JudgedItem> = slots
            .into_inner()
            .expect("slots lock")
            .into_iter()
            .map(|slot| slot.expect("every index visited"))
            .collect();
        let backend_failures = items
            .iter()
            .filter(|i| i.verdict.as_ref().err().map(|f| f.backend).unwrap_or(false))
            .count();
        let failures = items.iter().filter(|i| i.verdict.is_err()).count();
        Ok(JudgeListReport {
            user_id: user_id.to_string(),
            items,
            parse_failures: failures - backend_failures,
            backend_failures,
        })
    }
}

fn cache_key_for(model: &str, kind: PromptKind, sequences: &[Vec<ChatMessage>]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model.as_bytes());
    hasher.update([0x1f]);
    hasher.update(kind.label().as_bytes());
    for sequence in sequences {
        hasher.update([0x1e]);
        hasher.update(prompt_hash(sequence).as_bytes());
    }
    hex::encode(hasher.finalize())
}
