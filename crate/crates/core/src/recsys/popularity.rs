//! Popularity baseline: rank by training interaction count, seen items
//! excluded.

use std::collections::{HashMap, HashSet};

use super::{recommend_topk, MapScorer, RecList, RecsysError};
use crate::corpus::{Catalog, Interaction};

pub fn popularity_counts(train: &[Interaction]) -> HashMap<String, usize> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for inter in train {
        *counts.entry(inter.item_id.clone()).or_default() += 1;
    }
    counts
}

pub fn recommend_popularity(
    train: &[Interaction],
    catalog: &Catalog,
    user_id: &str,
    k: usize,
) -> Result<RecList, RecsysError> {
    let counts = popularity_counts(train);
    let exclude: HashSet<String> = train
        .iter()
        .filter(|i| i.user_id == user_id)
        .map(|i| i.item_id.clone())
        .collect();
    let scores = catalog
        .item_ids()
        .map(|i| (i.to_string(), counts.get(i).copied().unwrap_or(0) as f64))
        .collect();
    let items: Vec<String> = catalog.item_ids().map(str::to_string).collect();
    recommend_topk(&MapScorer(scores), &items, user_id, k, &exclude)
}
