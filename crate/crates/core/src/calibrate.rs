//! Ground-truth derivation from the six serendipity questions and the
//! prompt-selection calibration run (judge predictions scored with MAE and
//! three-class accuracy).

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::corpus::{build_history, AnswerRow, Catalog, Interaction};
use crate::judge::{Judge, JudgeError, JudgeRequest, PromptKind};

#[derive(Debug, Error)]
pub enum CalibrateError {
    #[error("expected exactly 6 question responses, got {0}")]
    WrongArity(usize),
    #[error("question response out of range: {0}")]
    OutOfRange(u8),
    #[error("prediction/truth length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("no judgeable labels")]
    NoJudgeableLabels,
    #[error("backend failed with {missing} verdicts still missing: {source}")]
    Backend {
        missing: usize,
        #[source]
        source: JudgeError,
    },
    #[error("i/o error writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Tie handling for the rounded mean: six responses can average to an
/// exact .5, so the labeling needs an explicit rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoundingRule {
    /// .5 rounds away from zero (the default, recorded in reports).
    #[default]
    HalfUp,
    /// Banker's rounding, the documented fallback if the reproduced
    /// distribution mismatches the published counts.
    HalfEven,
}

impl RoundingRule {
    pub fn label(self) -> &'static str {
        match self {
            RoundingRule::HalfUp => "half-up",
            RoundingRule::HalfEven => "half-even",
        }
    }
}

/// One labeled (user, item) pair: the derived five-level ground truth and
/// the six raw question responses it came from.
#[derive(Debug, Clone)]
pub struct GroundTruthLabel {
    pub user_id: String,
    pub item_id: String,
    pub g: u8,
    pub question_responses: [u8; 6],
    pub timestamp: i64,
}

/// Mean of the six responses rounded to the nearest integer (ties per the
/// default [`RoundingRule::HalfUp`]).
pub fn derive_ground_truth(responses: &[u8]) -> Result<u8, CalibrateError> {
    derive_ground_truth_with(responses, RoundingRule::HalfUp)
}

pub fn derive_ground_truth_with(
    responses: &[u8],
    rule: RoundingRule,
) -> Result<u8, CalibrateError> {
    if responses.len() != 6 {
        return Err(CalibrateError::WrongArity(responses.len()));
    }
    let mut sum = 0u32;
    for &r in responses {
        if !(1..=5).contains(&r) {
            return Err(CalibrateError::OutOfRange(r));
        }
        sum += r as u32;
    }
    // mean = sum/6; only multiples of 3 give an exact .5 fraction.
    let g = match rule {
        RoundingRule::HalfUp => (sum + 3) / 6,
        RoundingRule::HalfEven => {
            let down = sum / 6;
            let rem = sum % 6;
            match rem {
                0..=2 => down,
                4..=5 => down + 1,
                _ => {
                    if down.is_multiple_of(2) {
                        down
                    } else {
                        down + 1
                    }
                }
            }
        }
    };
    Ok(g as u8)
}

/// Turn answer rows into labels, excluding (and counting) rows with
/// missing or out-of-range question responses.
pub fn derive_labels(
    answers: &[AnswerRow],
    rule: RoundingRule,
) -> (Vec<GroundTruthLabel>, usize) {
    let mut labels = Vec::new();
    let mut excluded = 0usize;
    for row in answers {
        let responses: Vec<u8> = row.responses.iter().flatten().copied().collect();
        if responses.len() != 6 {
            excluded += 1;
            continue;
        }
        match derive_ground_truth_with(&responses, rule) {
            Ok(g) => labels.push(GroundTruthLabel {
                user_id: row.user_id.clone(),
                item_id: row.item_id.clone(),
                g,
                question_responses: responses.try_into().expect("length checked"),
                timestamp: row.timestamp,
            }),
            Err(_) => excluded += 1,
        }
    }
    (labels, excluded)
}

/// Counts of labels per level, index 0 = level 1.
pub fn label_distribution(labels: &[GroundTruthLabel]) -> [usize; 5] {
    let mut counts = [0usize; 5];
    for label in labels {
        counts[(label.g - 1) as usize] += 1;
    }
    counts
}

/// Mean absolute error between five-level predictions and truths.
pub fn mae(predictions: &[u8], truths: &[u8]) -> Result<f64, CalibrateError> {
    if predictions.len() != truths.len() {
        return Err(CalibrateError::LengthMismatch(predictions.len(), truths.len()));
    }
    if predictions.is_empty() {
        return Err(CalibrateError::EmptyInput);
    }
    let total: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(&p, &t)| (p as f64 - t as f64).abs())
        .sum();
    Ok(total / predictions.len() as f64)
}

fn three_class(v: u8) -> i8 {
    match v {
        0..=2 => -1,
        3 => 0,
        _ => 1,
    }
}

/// Share of pairs whose class (negative <3, neutral =3, positive >3)
/// matches, as a percentage.
pub fn three_class_accuracy(predictions: &[u8], truths: &[u8]) -> Result<f64, CalibrateError> {
    if predictions.len() != truths.len() {
        return Err(CalibrateError::LengthMismatch(predictions.len(), truths.len()));
    }
    if predictions.is_empty() {
        return Err(CalibrateError::EmptyInput);
    }
    let matches = predictions
        .iter()
        .zip(truths)
        .filter(|(&p, &t)| three_class(p) == three_class(t))
        .count();
    Ok(matches as f64 / predictions.len() as f64 * 100.0)
}

/// Calibration result for one prompt kind. `confusion[t][p]` counts labels
/// with truth `t+1` judged as `p+1`.
#[derive(Debug, Clone)]
pub struct CalibrationRow {
    pub kind: PromptKind,
    pub mae: f64,
    pub accuracy_pct: f64,
    pub judged: usize,
    pub parse_failures: usize,
    pub confusion: [[usize; 5]; 5],
}

#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub rows: Vec<CalibrationRow>,
    pub total_labels: usize,
    pub skipped_no_history: usize,
    pub skipped_unknown_item: usize,
    pub excluded_bank_users: usize,
    pub rounding: RoundingRule,
}

impl CalibrationReport {
    /// Tab-separated table mirroring the prompt-selection report shape:
    /// one row per kind with MAE and accuracy.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("prompt\tmae\taccuracy_pct\tjudged\tparse_failures\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{}\t{:.4}\t{:.2}\t{}\t{}\n",
                row.kind.label(),
                row.mae,
                row.accuracy_pct,
                row.judged,
                row.parse_failures
            ));
        }
        out
    }

    pub fn write_confusion_csvs(&self, dir: &Path) -> Result<(), CalibrateError> {
        std::fs::create_dir_all(dir).map_err(|source| CalibrateError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        for row in &self.rows {
            let path = dir.join(format!("confusion_{}.csv", row.kind.label()));
            let mut out = Vec::new();
            writeln!(out, "truth,pred1,pred2,pred3,pred4,pred5").expect("in-memory write");
            for (t, preds) in row.confusion.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    t + 1,
                    preds[0],
                    preds[1],
                    preds[2],
                    preds[3],
                    preds[4]
                )
                .expect("in-memory write");
            }
            std::fs::write(&path, out).map_err(|source| CalibrateError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        Ok(())
    }
}

/// Judge every label under every requested prompt kind and score the
/// predictions against the derived ground truth.
///
/// Labels are judgeable when the candidate item resolves in the catalog
/// and the user has a non-empty positive history strictly before the
/// label's timestamp. Parse failures are excluded and counted per kind;
/// a transport-tier failure aborts with the number of verdicts still
/// missing.
#[allow(clippy::too_many_arguments)]
pub fn run_prompt_selection(
    labels: &[GroundTruthLabel],
    kinds: &[PromptKind],
    judge: &Judge<'_>,
    catalog: &Catalog,
    history_log: &[Interaction],
    history_len: usize,
    exclude_users: &HashSet<String>,
    rounding: RoundingRule,
) -> Result<CalibrationReport, CalibrateError> {
    let mut skipped_no_history = 0usize;
    let mut skipped_unknown_item = 0usize;
    let mut excluded_bank_users = 0usize;

    // Judgeable labels with their prompt inputs, shared across kinds.
    let mut judgeable = Vec::new();
    for label in labels {
        if exclude_users.contains(&label.user_id) {
            excluded_bank_users += 1;
            continue;
        }
        let Some(candidate) = catalog.get(&label.item_id) else {
            skipped_unknown_item += 1;
            continue;
        };
        let history_ids = build_history(history_log, &label.user_id, history_len, label.timestamp);
        let history: Vec<_> = history_ids
            .iter()
            .filter_map(|id| catalog.get(id))
            .cloned()
            .collect();
        if history.is_empty() {
            skipped_no_history += 1;
            continue;
        }
        judgeable.push((label, history, candidate.clone()));
    }
    if judgeable.is_empty() {
        return Err(CalibrateError::NoJudgeableLabels);
    }

    let mut rows = Vec::new();
    for &kind in kinds {
        let mut preds = Vec::new();
        let mut truths = Vec::new();
        let mut confusion = [[0usize; 5]; 5];
        let mut parse_failures = 0usize;
        for (done, (label, history, candidate)) in judgeable.iter().enumerate() {
            let request = JudgeRequest::new(
                label.user_id.clone(),
                history.clone(),
                candidate.clone(),
                kind,
            )
            .expect("history validated non-empty and capped");
            match judge.judge_item(&request) {
                Ok(verdict) => {
                    preds.push(verdict.serendipity);
                    truths.push(label.g);
                    confusion[(label.g - 1) as usize][(verdict.serendipity - 1) as usize] += 1;
                }
                Err(err) if err.is_backend() => {
                    return Err(CalibrateError::Backend {
                        missing: judgeable.len() - done,
                        source: err,
                    });
                }
                Err(_) => parse_failures += 1,
            }
        }
        if preds.is_empty() {
            return Err(CalibrateError::NoJudgeableLabels);
        }
        rows.push(CalibrationRow {
            kind,
            mae: mae(&preds, &truths)?,
            accuracy_pct: three_class_accuracy(&preds, &truths)?,
            judged: preds.len(),
            parse_failures,
            confusion,
        });
    }

    Ok(CalibrationReport {
        rows,
        total_labels: labels.len(),
        skipped_no_history,
        skipped_unknown_item,
        excluded_bank_users,
        rounding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ground_truth_examples() {
        assert_eq!(derive_ground_truth(&[1, 1, 1, 1, 1, 1]).unwrap(), 1);
        // mean 17/6 ≈ 2.833 → 3
        assert_eq!(derive_ground_truth(&[2, 3, 3, 2, 4, 3]).unwrap(), 3);
        assert_eq!(derive_ground_truth(&[5, 5, 5, 5, 5, 5]).unwrap(), 5);
    }

    #[test]
    fn ground_truth_rounds_half_up() {
        // sum 9 → mean 1.5
        assert_eq!(derive_ground_truth(&[1, 1, 1, 2, 2, 2]).unwrap(), 2);
        assert_eq!(
            derive_ground_truth_with(&[1, 1, 1, 2, 2, 2], RoundingRule::HalfEven).unwrap(),
            2
        );
        // sum 15 → mean 2.5: half-up gives 3, half-even keeps 2.
        assert_eq!(derive_ground_truth(&[1, 2, 2, 3, 3, 4]).unwrap(), 3);
        assert_eq!(
            derive_ground_truth_with(&[1, 2, 2, 3, 3, 4], RoundingRule::HalfEven).unwrap(),
            2
        );
    }

    #[test]
    fn ground_truth_validates_input() {
        assert!(matches!(
            derive_ground_truth(&[1, 2, 3]),
            Err(CalibrateError::WrongArity(3))
        ));
        assert!(matches!(
            derive_ground_truth(&[1, 2, 3, 4, 5, 6]),
            Err(CalibrateError::OutOfRange(6))
        ));
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0.0);
        assert!((mae(&[1, 2, 3], &[2, 2, 5]).unwrap() - 1.0).abs() < 1e-15);
        assert!(mae(&[1], &[1, 2]).is_err());
        assert!(mae(&[], &[]).is_err());
    }

    #[test]
    fn mae_matches_loop_oracle() {
        // 100 deterministic pseudo-random pairs vs. direct summation.
        let mut preds = Vec::new();
        let mut truths = Vec::new();
        let mut state = 12345u64;
        for _ in 0..100 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            preds.push(((state >> 33) % 5 + 1) as u8);
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            truths.push(((state >> 33) % 5 + 1) as u8);
        }
        let mut total = 0.0;
        for i in 0..100 {
            let diff = preds[i] as f64 - truths[i] as f64;
            total += diff.abs();
        }
        assert!((mae(&preds, &truths).unwrap() - total / 100.0).abs() < 1e-12);
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(three_class_accuracy(&[1, 3, 5], &[2, 3, 4]).unwrap(), 100.0);
        let one_third = three_class_accuracy(&[1, 3, 5], &[5, 3, 1]).unwrap();
        assert!((one_third - 100.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn accuracy_invariant_within_class() {
        let truths = [1, 2, 3, 4, 5, 2, 4];
        let preds = [2, 1, 3, 5, 4, 2, 4];
        // Relabeling 4↔5 and 1↔2 in the predictions keeps every class.
        let relabeled: Vec<u8> = preds
            .iter()
            .map(|&p| match p {
                4 => 5,
                5 => 4,
                1 => 2,
                2 => 1,
                other => other,
            })
            .collect();
        assert_eq!(
            three_class_accuracy(&preds, &truths).unwrap(),
            three_class_accuracy(&relabeled, &truths).unwrap()
        );
    }

    #[test]
    fn cold_cache_with_unreachable_backend_aborts_with_missing_count() {
        use crate::corpus::{Catalog, ItemRecord};
        use crate::judge::{Judge, MockBackend, MockFallback, VerdictCache};

        let catalog = Catalog::from_items(
            (0..6)
                .map(|k| ItemRecord::new(format!("i{k}"), &format!("Item {k}"), vec![]))
                .collect(),
        )
        .unwrap();
        let history_log: Vec<Interaction> = (0..4)
            .map(|k| Interaction {
                user_id: "u".into(),
                item_id: format!("i{k}"),
                rating: 5,
                timestamp: k,
            })
            .collect();
        let labels: Vec<GroundTruthLabel> = (0..3)
            .map(|k| GroundTruthLabel {
                user_id: "u".into(),
                item_id: format!("i{}", 4 + k % 2),
                g: 3,
                question_responses: [3; 6],
                timestamp: 100 + k as i64,
            })
            .collect();

        let dir = tempfile::tempdir().unwrap();
        let cache = VerdictCache::open(&dir.path().join("cache.jsonl")).unwrap();
        // Empty table, no fallback: every call is a backend-tier failure.
        let backend = MockBackend::new("m", MockFallback::None);
        let judge = Judge::new(&backend, &cache);
        let err = run_prompt_selection(
            &labels,
            &[crate::judge::PromptKind::Base],
            &judge,
            &catalog,
            &history_log,
            10,
            &HashSet::new(),
            RoundingRule::HalfUp,
        )
        .unwrap_err();
        match err {
            CalibrateError::Backend { missing, .. } => assert_eq!(missing, 3),
            other => panic!("expected backend abort, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn ground_truth_is_monotone(responses in proptest::array::uniform6(1u8..=5), idx in 0usize..6) {
            let g = derive_ground_truth(&responses).unwrap();
            let mut raised = responses;
            if raised[idx] < 5 {
                raised[idx] += 1;
                prop_assert!(derive_ground_truth(&raised).unwrap() >= g);
            }
        }

        #[test]
        fn mae_is_symmetric_and_zero_iff_equal(
            pairs in proptest::collection::vec((1u8..=5, 1u8..=5), 1..50)
        ) {
            let preds: Vec<u8> = pairs.iter().map(|p| p.0).collect();
            let truths: Vec<u8> = pairs.iter().map(|p| p.1).collect();
            let ab = mae(&preds, &truths).unwrap();
            let ba = mae(&truths, &preds).unwrap();
            prop_assert!((ab - ba).abs() < 1e-15);
            prop_assert_eq!(ab == 0.0, preds == truths);
        }
    }
}
