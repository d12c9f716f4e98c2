//! k-furthest-neighbors recommender: items avoided by the users most
//! dissimilar to the target user.
//!
//! Neighbor similarity is Jaccard over positive-item sets; the k most
//! dissimilar users form the furthest set. Every non-consumed item is
//! scored by the fraction of furthest neighbors who avoided it (items
//! avoided by all of them score highest), with global popularity folded in
//! as a strictly smaller tiebreak term, so an item consumed by every
//! furthest neighbor can never outrank one avoided by all of them.

use std::collections::HashSet;

use super::{popularity_counts, positives_by_user, recommend_topk, MapScorer, RecList, RecsysError};
use crate::corpus::{Catalog, Interaction};

fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return 0.0;
    }
    inter as f64 / union as f64
}

pub fn recommend_kfn(
    train: &[Interaction],
    catalog: &Catalog,
    user_id: &str,
    k: usize,
    k_neighbors: usize,
) -> Result<RecList, RecsysError> {
    let by_user = positives_by_user(train);
    let own = by_user
        .get(user_id)
        .ok_or_else(|| RecsysError::UnknownUser(user_id.to_string()))?;
    if by_user.len() < 2 {
        return Err(RecsysError::NoOtherUsers);
    }

    // Most dissimilar first; ties resolved by user id for determinism.
    let mut others: Vec<(&String, f64)> = by_user
        .iter()
        .filter(|(u, _)| u.as_str() != user_id)
        .map(|(u, items)| (u, jaccard(own, items)))
        .collect();
    others.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    let furthest: Vec<&String> = others
        .iter()
        .take(k_neighbors.max(1))
        .map(|(u, _)| *u)
        .collect();
    let furthest_count = furthest.len() as f64;

    let counts = popularity_counts(train);
    let max_count = counts.values().copied().max().unwrap_or(0) as f64;
    let scores = catalog
        .item_ids()
        .map(|item| {
            let consumed = furthest
                .iter()
                .filter(|u| by_user[**u].contains(item))
                .count() as f64;
            let avoided_fraction = 1.0 - consumed / furthest_count;
            let popularity = counts.get(item).copied().unwrap_or(0) as f64 / (max_count + 1.0);
            // The popularity term is < 1/(F+1), smaller than any gap
            // between distinct avoidance fractions (multiples of 1/F).
            (
                item.to_string(),
                avoided_fraction + popularity / (furthest_count + 1.0),
            )
        })
        .collect();

    recommend_topk(&MapScorer(scores), &catalog.item_ids().map(str::to_string).collect::<Vec<_>>(), user_id, k, own)
}
