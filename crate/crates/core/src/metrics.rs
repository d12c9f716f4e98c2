//! Ranking metrics in accuracy and serendipity variants.
//!
//! Accuracy variants take the user's held-out positives as the relevant
//! set; serendipity variants take the judge-derived set from
//! [`serendipity_relevant_set`]. NDCG uses binary gains with
//! `DCG = Σ_{r=1..k} rel(r)/log2(r+1)` and the ideal truncated at
//! `min(k, |relevant|)`.

use std::collections::HashSet;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("ranked list is empty")]
    EmptyRankedList,
    #[error("relevant set is empty")]
    EmptyRelevantSet,
    #[error("cutoff k must be at least 1")]
    BadCutoff,
    #[error("ranked list contains duplicate item: {0}")]
    DuplicateItem(String),
    #[error("no verdicts to average")]
    EmptyVerdicts,
    #[error("report needs at least one fold with at least one user")]
    EmptyReport,
}

/// One ranking to score: an ordered duplicate-free list, the relevant
/// item set, and the cutoff.
#[derive(Debug, Clone)]
pub struct RankedEvaluation {
    ranked_items: Vec<String>,
    relevant: HashSet<String>,
    k: usize,
}

impl RankedEvaluation {
    pub fn new(
        ranked_items: Vec<String>,
        relevant: HashSet<String>,
        k: usize,
    ) -> Result<Self, MetricsError> {
        if k == 0 {
            return Err(MetricsError::BadCutoff);
        }
        let mut seen = HashSet::with_capacity(ranked_items.len());
        for item in &ranked_items {
            if !seen.insert(item.as_str()) {
                return Err(MetricsError::DuplicateItem(item.clone()));
            }
        }
        Ok(Self { ranked_items, relevant, k })
    }

    pub fn ranked_items(&self) -> &[String] {
        &self.ranked_items
    }

    pub fn relevant(&self) -> &HashSet<String> {
        &self.relevant
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn top_k_hits(&self) -> usize {
        self.ranked_items
            .iter()
            .take(self.k)
            .filter(|i| self.relevant.contains(i.as_str()))
            .count()
    }
}

/// |top-k ∩ relevant| / k. The denominator stays k even when fewer items
/// were recommended.
pub fn precision_at_k(e: &RankedEvaluation) -> Result<f64, MetricsError> {
    if e.ranked_items.is_empty() {
        return Err(MetricsError::EmptyRankedList);
    }
    Ok(e.top_k_hits() as f64 / e.k as f64)
}

/// |top-k ∩ relevant| / |relevant|.
pub fn recall_at_k(e: &RankedEvaluation) -> Result<f64, MetricsError> {
    if e.relevant.is_empty() {
        return Err(MetricsError::EmptyRelevantSet);
    }
    Ok(e.top_k_hits() as f64 / e.relevant.len() as f64)
}

/// Binary-gain NDCG; 0 when the relevant set is empty.
pub fn ndcg_at_k(e: &RankedEvaluation) -> Result<f64, MetricsError> {
    if e.ranked_items.is_empty() {
        return Err(MetricsError::EmptyRankedList);
    }
    if e.relevant.is_empty() {
        return Ok(0.0);
    }
    let discount = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let dcg: f64 = e
        .ranked_items
        .iter()
        .take(e.k)
        .enumerate()
        .filter(|(_, item)| e.relevant.contains(item.as_str()))
        .map(|(idx, _)| discount(idx + 1))
        .sum();
    let ideal_len = e.k.min(e.relevant.len());
    let idcg: f64 = (1..=ideal_len).map(discount).sum();
    Ok(dcg / idcg)
}

/// Items whose judged serendipity meets `threshold`. Items whose judging
/// failed (`None`) are treated as non-serendipitous.
pub fn serendipity_relevant_set(
    judged: &[(String, Option<u8>)],
    threshold: u8,
) -> HashSet<String> {
    judged
        .iter()
        .filter(|(_, score)| score.map(|s| s >= threshold).unwrap_or(false))
        .map(|(item, _)| item.clone())
        .collect()
}

/// Mean serendipity over the first `min(k, len)` entries. Failed items
/// (`None`) are excluded from the mean; `Ok(None)` means every entry in
/// the window failed.
pub fn avg_score_at_k(scores: &[Option<u8>], k: usize) -> Result<Option<f64>, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::EmptyVerdicts);
    }
    if k == 0 {
        return Err(MetricsError::BadCutoff);
    }
    let window = &scores[..scores.len().min(k)];
    let judged: Vec<u8> = window.iter().flatten().copied().collect();
    if judged.is_empty() {
        return Ok(None);
    }
    Ok(Some(judged.iter().map(|&s| s as f64).sum::<f64>() / judged.len() as f64))
}

/// Per-user metric values for one fold. `None` marks a user excluded from
/// that metric (no test positives for the accuracy pair, no judged items
/// for the average score).
#[derive(Debug, Clone, Default)]
pub struct UserMetrics {
    pub user_id: String,
    pub precision_acc: Option<f64>,
    pub ndcg_acc: Option<f64>,
    pub precision_ser: Option<f64>,
    pub ndcg_ser: Option<f64>,
    pub avg_score: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FoldUserMetrics {
    pub fold_index: usize,
    pub users: Vec<UserMetrics>,
}

/// Mean over users within each fold, then over folds. `per_fold` keeps a
/// `None` for folds where no user qualified; such folds are excluded from
/// the overall mean.
#[derive(Debug, Clone)]
pub struct MetricAggregate {
    pub per_fold: Vec<Option<f64>>,
    pub overall: f64,
}

fn aggregate(folds: &[FoldUserMetrics], pick: impl Fn(&UserMetrics) -> Option<f64>) -> MetricAggregate {
    let per_fold: Vec<Option<f64>> = folds
        .iter()
        .map(|fold| {
            let values: Vec<f64> = fold.users.iter().filter_map(&pick).collect();
            if values.is_empty() {
                None
            } else {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            }
        })
        .collect();
    let fold_means: Vec<f64> = per_fold.iter().flatten().copied().collect();
    let overall = if fold_means.is_empty() {
        0.0
    } else {
        fold_means.iter().sum::<f64>() / fold_means.len() as f64
    };
    MetricAggregate { per_fold, overall }
}

/// Three-fold-averaged report for one model: precision and NDCG as
/// percentages, the average judge score raw.
#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub model: String,
    pub k: usize,
    pub precision_acc_pct: MetricAggregate,
    pub ndcg_acc_pct: MetricAggregate,
    pub precision_ser_pct: MetricAggregate,
    pub ndcg_ser_pct: MetricAggregate,
    pub avg_score: MetricAggregate,
}

pub fn aggregate_report(
    model: &str,
    k: usize,
    folds: &[FoldUserMetrics],
) -> Result<EvaluationReport, MetricsError> {
    if folds.is_empty() || folds.iter().all(|f| f.users.is_empty()) {
        return Err(MetricsError::EmptyReport);
    }
    let pct = |agg: MetricAggregate| MetricAggregate {
        per_fold: agg.per_fold.iter().map(|v| v.map(|x| x * 100.0)).collect(),
        overall: agg.overall * 100.0,
    };
    Ok(EvaluationReport {
        model: model.to_string(),
        k,
        precision_acc_pct: pct(aggregate(folds, |u| u.precision_acc)),
        ndcg_acc_pct: pct(aggregate(folds, |u| u.ndcg_acc)),
        precision_ser_pct: pct(aggregate(folds, |u| u.precision_ser)),
        ndcg_ser_pct: pct(aggregate(folds, |u| u.ndcg_ser)),
        avg_score: aggregate(folds, |u| u.avg_score),
    })
}
