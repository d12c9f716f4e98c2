//! Built-in baseline recommenders and the rec-list interchange format.
//!
//! Every recommender produces a [`RecList`]: a per-user ranking of unseen
//! items with non-increasing model scores and none of the user's training
//! positives. Externally trained systems feed the same evaluation through
//! [`read_reclist_file`].

mod kfn;
mod mf;
mod popularity;
mod reclist;
mod tune;

pub use kfn::recommend_kfn;
pub use mf::{
    load_model, save_model, train_bprmf, train_uaum, CategoryIndex, MfHyperParams, MfModel,
    UaumScorer,
};
pub use popularity::{popularity_counts, recommend_popularity};
pub use reclist::{read_reclist_file, write_reclist_file};
pub use tune::{tune, mean_validation_recall, ModelKind, SearchSpace, TrialParams, TrialRecord, TuneOutcome};

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecsysError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("latent dimension must be at least 1")]
    BadDimension,
    #[error("training diverged (non-finite parameter) at epoch {0}")]
    Diverged(usize),
    #[error("cutoff k must be at least 1")]
    BadCutoff,
    #[error("user {0} has no training positives")]
    UnknownUser(String),
    #[error("no other users in the training set")]
    NoOtherUsers,
    #[error("all {} tuning trials failed", trace.len())]
    AllTrialsFailed { trace: Vec<tune::TrialRecord> },
    #[error("malformed rec-list line {line}: {reason}")]
    MalformedRecList { line: usize, reason: String },
    #[error("duplicate item {item} in rec list of user {user}")]
    DuplicateRecItem { user: String, item: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Per-user ranked list of item ids with model scores, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RecList {
    pub user_id: String,
    pub items: Vec<(String, f64)>,
}

impl RecList {
    pub fn item_ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|(id, _)| id.as_str())
    }

    /// Check the list invariants: duplicate-free, scores non-increasing,
    /// and no overlap with the user's training positives.
    pub fn validate(&self, train_positives: &HashSet<String>) -> Result<(), RecsysError> {
        let mut seen = HashSet::new();
        let mut last = f64::INFINITY;
        for (item, score) in &self.items {
            if !seen.insert(item.as_str()) {
                return Err(RecsysError::DuplicateRecItem {
                    user: self.user_id.clone(),
                    item: item.clone(),
                });
            }
            if train_positives.contains(item.as_str()) {
                return Err(RecsysError::DuplicateRecItem {
                    user: self.user_id.clone(),
                    item: format!("{item} (training positive)"),
                });
            }
            debug_assert!(*score <= last + 1e-12, "scores must be non-increasing");
            last = *score;
        }
        Ok(())
    }
}

/// Anything that can score a (user, item) pair on a frozen model.
pub trait Scorer {
    fn score(&self, user_id: &str, item_id: &str) -> f64;
}

/// Fixed per-item scores, user-independent.
pub struct MapScorer(pub HashMap<String, f64>);

impl Scorer for MapScorer {
    fn score(&self, _user_id: &str, item_id: &str) -> f64 {
        self.0.get(item_id).copied().unwrap_or(0.0)
    }
}

/// Top-k unseen items by score, descending, ties broken by ascending
/// item id. Returns fewer than k items when the unseen pool is smaller.
pub fn recommend_topk(
    scorer: &dyn Scorer,
    items: &[String],
    user_id: &str,
    k: usize,
    exclude: &HashSet<String>,
) -> Result<RecList, RecsysError> {
    if k == 0 {
        return Err(RecsysError::BadCutoff);
    }
    let mut scored: Vec<(&String, f64)> = items
        .iter()
        .filter(|i| !exclude.contains(i.as_str()))
        .map(|i| (i, scorer.score(user_id, i)))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    scored.truncate(k);
    Ok(RecList {
        user_id: user_id.to_string(),
        items: scored.into_iter().map(|(i, s)| (i.clone(), s)).collect(),
    })
}

/// Training positives per user, in deterministic user order.
pub fn positives_by_user(train: &[crate::corpus::Interaction]) -> BTreeMap<String, HashSet<String>> {
    let mut map: BTreeMap<String, HashSet<String>> = BTreeMap::new();
    for inter in train {
        map.entry(inter.user_id.clone())
            .or_default()
            .insert(inter.item_id.clone());
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(ids: &[&str]) -> Vec<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn topk_excludes_and_sorts() {
        let scorer = MapScorer(
            [("i1".to_string(), 0.9), ("i2".to_string(), 0.5), ("i3".to_string(), 0.1)]
                .into_iter()
                .collect(),
        );
        let exclude: HashSet<String> = ["i1".to_string()].into_iter().collect();
        let list = recommend_topk(&scorer, &items(&["i1", "i2", "i3"]), "u", 2, &exclude).unwrap();
        assert_eq!(list.item_ids().collect::<Vec<_>>(), vec!["i2", "i3"]);
    }

    #[test]
    fn ties_break_lexicographically() {
        let scorer = MapScorer(
            [("b".to_string(), 1.0), ("a".to_string(), 1.0), ("c".to_string(), 1.0)]
                .into_iter()
                .collect(),
        );
        let list = recommend_topk(&scorer, &items(&["b", "a", "c"]), "u", 3, &HashSet::new()).unwrap();
        assert_eq!(list.item_ids().collect::<Vec<_>>(), vec!["a", "b", "c"]);
    }

    #[test]
    fn topk_matches_full_sort_oracle_on_large_fixture() {
        // 1000 items with deterministic pseudo-random scores.
        let universe: Vec<String> = (0..1000).map(|i| format!("i{i:04}")).collect();
        let mut state = 99u64;
        let scores: HashMap<String, f64> = universe
            .iter()
            .map(|id| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (id.clone(), (state >> 11) as f64 / (1u64 << 53) as f64)
            })
            .collect();
        let exclude: HashSet<String> = universe.iter().take(50).cloned().collect();
        let list =
            recommend_topk(&MapScorer(scores.clone()), &universe, "u", 20, &exclude).unwrap();

        // Independent oracle: full sort of all eligible items.
        let mut all: Vec<(String, f64)> = universe
            .iter()
            .filter(|i| !exclude.contains(i.as_str()))
            .map(|i| (i.clone(), scores[i]))
            .collect();
        all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        all.truncate(20);
        assert_eq!(list.items, all);
    }

    #[test]
    fn shorter_list_when_pool_is_small() {
        let scorer = MapScorer(HashMap::new());
        let list = recommend_topk(&scorer, &items(&["a", "b"]), "u", 10, &HashSet::new()).unwrap();
        assert_eq!(list.items.len(), 2);
    }

    #[test]
    fn validate_flags_duplicates_and_training_positives() {
        let list = RecList {
            user_id: "u".into(),
            items: vec![("a".into(), 1.0), ("a".into(), 0.5)],
        };
        assert!(list.validate(&HashSet::new()).is_err());
        let list = RecList {
            user_id: "u".into(),
            items: vec![("a".into(), 1.0)],
        };
        let train: HashSet<String> = ["a".to_string()].into_iter().collect();
        assert!(list.validate(&train).is_err());
        assert!(list.validate(&HashSet::new()).is_ok());
    }
}
