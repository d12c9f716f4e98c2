//! Per-fold evaluation: accuracy metrics against held-out test positives,
//! serendipity metrics against judged verdicts, aggregated into the
//! model-comparison report.
//!
//! Verdicts come from the cache only; an item with no usable verdict is
//! treated conservatively (non-serendipitous, excluded from the average
//! score) and counted.

use std::collections::{HashMap, HashSet};

use crate::corpus::Interaction;
use crate::metrics::{
    aggregate_report, avg_score_at_k, ndcg_at_k, precision_at_k, serendipity_relevant_set,
    EvaluationReport, FoldUserMetrics, MetricsError, RankedEvaluation, UserMetrics,
};
use crate::recsys::RecList;

/// Which users get evaluated. The counterfactual default is every list
/// user with training history; `Test` additionally requires presence in
/// the fold's test partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Population {
    #[default]
    Train,
    Test,
}

impl std::str::FromStr for Population {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Population::Train),
            "test" => Ok(Population::Test),
            other => Err(format!("unknown population: {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub k: usize,
    pub ser_threshold: u8,
    pub population: Population,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            k: 20,
            ser_threshold: 4,
            population: Population::Train,
        }
    }
}

/// One fold's per-user metrics plus the accounting the report surfaces.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub metrics: FoldUserMetrics,
    pub skipped_no_train_history: usize,
    pub skipped_not_in_test: usize,
    pub skipped_empty_list: usize,
    pub unjudged_items: usize,
}

/// Evaluate one model's lists on one fold. `judged` maps (user, item) to
/// the serendipity score when a usable verdict exists.
pub fn evaluate_fold(
    fold_index: usize,
    train: &[Interaction],
    test: &[Interaction],
    lists: &[RecList],
    judged: &dyn Fn(&str, &str) -> Option<u8>,
    options: &EvalOptions,
) -> Result<FoldOutcome, MetricsError> {
    let train_users: HashSet<&str> = train.iter().map(|i| i.user_id.as_str()).collect();
    let mut test_positives: HashMap<&str, HashSet<String>> = HashMap::new();
    for inter in test {
        test_positives
            .entry(inter.user_id.as_str())
            .or_default()
            .insert(inter.item_id.clone());
    }

    let mut outcome = FoldOutcome {
        metrics: FoldUserMetrics {
            fold_index,
            users: Vec::new(),
        },
        skipped_no_train_history: 0,
        skipped_not_in_test: 0,
        skipped_empty_list: 0,
        unjudged_items: 0,
    };

    for list in lists {
        let user = list.user_id.as_str();
        if !train_users.contains(user) {
            outcome.skipped_no_train_history += 1;
            continue;
        }
        if options.population == Population::Test && !test_positives.contains_key(user) {
            outcome.skipped_not_in_test += 1;
            continue;
        }
        if list.items.is_empty() {
            outcome.skipped_empty_list += 1;
            continue;
        }
        let ranked: Vec<String> = list.item_ids().map(str::to_string).collect();

        // Accuracy pair: only users with at least one test positive.
        let (precision_acc, ndcg_acc) = match test_positives.get(user) {
            Some(relevant) if !relevant.is_empty() => {
                let eval = RankedEvaluation::new(ranked.clone(), relevant.clone(), options.k)?;
                (Some(precision_at_k(&eval)?), Some(ndcg_at_k(&eval)?))
            }
            _ => (None, None),
        };

        // Serendipity pair: every evaluated user, judged or not.
        let scored: Vec<(String, Option<u8>)> = ranked
            .iter()
            .map(|item| (item.clone(), judged(user, item)))
            .collect();
        outcome.unjudged_items += scored.iter().filter(|(_, s)| s.is_none()).count();
        let ser_set = serendipity_relevant_set(&scored, options.ser_threshold);
        let ser_eval = RankedEvaluation::new(ranked, ser_set, options.k)?;
        let precision_ser = Some(precision_at_k(&ser_eval)?);
        let ndcg_ser = Some(ndcg_at_k(&ser_eval)?);

        let scores_in_order: Vec<Option<u8>> = scored.iter().map(|(_, s)| *s).collect();
        let avg_score = avg_score_at_k(&scores_in_order, options.k)?;

        outcome.metrics.users.push(UserMetrics {
            user_id: user.to_string(),
            precision_acc,
            ndcg_acc,
            precision_ser,
            ndcg_ser,
            avg_score,
        });
    }
    Ok(outcome)
}

/// Model-comparison table: one row per model, three-fold averages,
/// precision/NDCG as percentages and the average judge score raw.
pub fn render_report_tsv(reports: &[EvaluationReport]) -> String {
    let mut out = String::from("model\tp_acc\tn_acc\tp_ser\tn_ser\tavg\n");
    for r in reports {
        out.push_str(&format!(
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\n",
            r.model,
            r.precision_acc_pct.overall,
            r.ndcg_acc_pct.overall,
            r.precision_ser_pct.overall,
            r.ndcg_ser_pct.overall,
            r.avg_score.overall
        ));
    }
    out
}

/// Per-fold breakdown (one row per model per fold) plus the skip counters.
pub fn render_per_fold_tsv(
    reports: &[(EvaluationReport, Vec<FoldOutcome>)],
) -> String {
    let mut out = String::from(
        "model\tfold\tusers\tp_acc\tn_acc\tp_ser\tn_ser\tavg\tskipped_no_train\tskipped_not_in_test\tunjudged_items\n",
    );
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
    for (report, folds) in reports {
        for (idx, fold) in folds.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                report.model,
                fold.metrics.fold_index,
                fold.metrics.users.len(),
                fmt(report.precision_acc_pct.per_fold.get(idx).copied().flatten()),
                fmt(report.ndcg_acc_pct.per_fold.get(idx).copied().flatten()),
                fmt(report.precision_ser_pct.per_fold.get(idx).copied().flatten()),
                fmt(report.ndcg_ser_pct.per_fold.get(idx).copied().flatten()),
                fmt(report.avg_score.per_fold.get(idx).copied().flatten()),
                fold.skipped_no_train_history,
                fold.skipped_not_in_test,
                fold.unjudged_items,
            ));
        }
    }
    out
}

/// Aggregate one model's fold outcomes into its report row.
pub fn report_for_model(
    model: &str,
    k: usize,
    folds: &[FoldOutcome],
) -> Result<EvaluationReport, MetricsError> {
    let per_fold: Vec<FoldUserMetrics> = folds.iter().map(|f| f.metrics.clone()).collect();
    aggregate_report(model, k, &per_fold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inter(u: &str, i: &str, ts: i64) -> Interaction {
        Interaction {
            user_id: u.into(),
            item_id: i.into(),
            rating: 5,
            timestamp: ts,
        }
    }

    fn list(user: &str, items: &[&str]) -> RecList {
        RecList {
            user_id: user.into(),
            items: items
                .iter()
                .enumerate()
                .map(|(r, i)| (i.to_string(), 1.0 - r as f64 * 0.01))
                .collect(),
        }
    }

    #[test]
    fn single_user_fold_matches_hand_metrics() {
        let train = vec![inter("u", "t0", 1)];
        let test = vec![inter("u", "a", 10), inter("u", "c", 11)];
        let lists = vec![list("u", &["a", "b", "c", "d"])];
        // a → 5, b → 3, c unjudged, d → 4.
        let judged = |_: &str, item: &str| match item {
            "a" => Some(5),
            "b" => Some(3),
            "d" => Some(4),
            _ => None,
        };
        let options = EvalOptions { k: 4, ser_threshold: 4, population: Population::Train };
        let outcome = evaluate_fold(0, &train, &test, &lists, &judged, &options).unwrap();
        assert_eq!(outcome.metrics.users.len(), 1);
        assert_eq!(outcome.unjudged_items, 1);
        let u = &outcome.metrics.users[0];
        // Accuracy: relevant {a, c}; hits at ranks 1 and 3.
        assert!((u.precision_acc.unwrap() - 0.5).abs() < 1e-12);
        let idcg = 1.0 + 1.0 / 3f64.log2();
        let dcg = 1.0 + 1.0 / 4f64.log2();
        assert!((u.ndcg_acc.unwrap() - dcg / idcg).abs() < 1e-12);
        // Serendipity: set {a, d} (c unjudged → excluded), hits ranks 1, 4.
        assert!((u.precision_ser.unwrap() - 0.5).abs() < 1e-12);
        // Avg over judged in window: (5 + 3 + 4) / 3.
        assert!((u.avg_score.unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn users_without_train_history_are_skipped_and_counted() {
        let train = vec![inter("u1", "t0", 1)];
        let test = vec![inter("u2", "a", 10)];
        let lists = vec![list("u1", &["a"]), list("u2", &["a"])];
        let judged = |_: &str, _: &str| Some(3);
        let outcome =
            evaluate_fold(0, &train, &test, &lists, &judged, &EvalOptions::default()).unwrap();
        assert_eq!(outcome.metrics.users.len(), 1);
        assert_eq!(outcome.skipped_no_train_history, 1);
    }

    #[test]
    fn empty_test_users_keep_serendipity_metrics_only() {
        let train = vec![inter("u1", "t0", 1)];
        let test: Vec<Interaction> = Vec::new();
        let lists = vec![list("u1", &["a", "b"])];
        let judged = |_: &str, item: &str| (item == "a").then_some(5);
        let outcome =
            evaluate_fold(0, &train, &test, &lists, &judged, &EvalOptions::default()).unwrap();
        let u = &outcome.metrics.users[0];
        assert_eq!(u.precision_acc, None);
        assert_eq!(u.ndcg_acc, None);
        assert!(u.precision_ser.is_some());
        assert_eq!(u.avg_score, Some(5.0));
    }

    #[test]
    fn test_population_restricts_to_test_users() {
        let train = vec![inter("u1", "t0", 1), inter("u2", "t1", 2)];
        let test = vec![inter("u2", "a", 10)];
        let lists = vec![list("u1", &["a"]), list("u2", &["a"])];
        let judged = |_: &str, _: &str| Some(2);
        let options = EvalOptions { population: Population::Test, ..Default::default() };
        let outcome = evaluate_fold(0, &train, &test, &lists, &judged, &options).unwrap();
        assert_eq!(outcome.metrics.users.len(), 1);
        assert_eq!(outcome.metrics.users[0].user_id, "u2");
        assert_eq!(outcome.skipped_not_in_test, 1);
    }

    #[test]
    fn report_rendering_has_table_shape() {
        let train = vec![inter("u", "t0", 1)];
        let test = vec![inter("u", "a", 10)];
        let lists = vec![list("u", &["a", "b"])];
        let judged = |_: &str, _: &str| Some(4);
        let outcome =
            evaluate_fold(0, &train, &test, &lists, &judged, &EvalOptions::default()).unwrap();
        let report = report_for_model("bprmf", 20, &[outcome.clone()]).unwrap();
        let tsv = render_report_tsv(&[report.clone()]);
        assert!(tsv.starts_with("model\tp_acc\tn_acc\tp_ser\tn_ser\tavg\n"));
        assert!(tsv.contains("bprmf"));
        let per_fold = render_per_fold_tsv(&[(report, vec![outcome])]);
        assert!(per_fold.contains("bprmf\t0\t1"));
    }
}
