//! Amazon reviews loader (Beauty subset): line-delimited JSON reviews plus
//! product metadata.
//!
//! Expected layout: `reviews.json` with `reviewerID`, `asin`, `overall`,
//! `unixReviewTime` per line; `meta.json` with `asin`, `title`, and
//! `categories` as a list of category paths. The leaf of each path becomes
//! a category label.

use std::path::Path;

use serde_json::Value;

use super::{Catalog, CorpusError, Interaction, ItemRecord, RawLog};

pub(crate) fn load(dir: &Path) -> Result<(Catalog, RawLog), CorpusError> {
    let meta_path = dir.join("meta.json");
    let mut items = Vec::new();
    for (row, line) in super::read_lines(&meta_path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
            path: meta_path.display().to_string(),
            row,
            reason: e.to_string(),
        })?;
        let asin = value["asin"].as_str().ok_or_else(|| CorpusError::Malformed {
            path: meta_path.display().to_string(),
            row,
            reason: "missing asin".into(),
        })?;
        let title = value["title"].as_str().unwrap_or_default();
        items.push(ItemRecord::new(asin, title, category_leaves(&value)));
    }
    let catalog = Catalog::from_items(items)?;

    let reviews_path = dir.join("reviews.json");
    let lines = super::read_lines(&reviews_path)?;
    let mut rows = Vec::with_capacity(lines.len());
    let mut malformed = Vec::new();
    let mut input_rows = 0usize;
    for (row, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        input_rows += 1;
        match parse_review(line) {
            Ok(inter) => rows.push(inter),
            Err(reason) => malformed.push((row, reason)),
        }
    }
    Ok((catalog, RawLog { rows, input_rows, malformed }))
}

/// Last element of each category path, deduplicated in first-seen order.
fn category_leaves(value: &Value) -> Vec<String> {
    let mut leaves = Vec::new();
    if let Some(paths) = value["categories"].as_array() {
        for path in paths {
            let leaf = match path {
                Value::Array(parts) => parts.last().and_then(|p| p.as_str()),
                Value::String(s) => Some(s.as_str()),
                _ => None,
            };
            if let Some(leaf) = leaf {
                if !leaves.iter().any(|l| l == leaf) {
                    leaves.push(leaf.to_string());
                }
            }
        }
    }
    leaves
}

fn parse_review(line: &str) -> Result<Interaction, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let user_id = value["reviewerID"].as_str().ok_or("missing reviewerID")?;
    let item_id = value["asin"].as_str().ok_or("missing asin")?;
    let overall = value["overall"].as_f64().ok_or("missing overall")?;
    if overall.fract() != 0.0 || !(1.0..=5.0).contains(&overall) {
        return Err(format!("rating out of range: {overall}"));
    }
    let timestamp = value["unixReviewTime"].as_i64().ok_or("missing unixReviewTime")?;
    Ok(Interaction {
        user_id: user_id.to_string(),
        item_id: item_id.to_string(),
        rating: overall as u8,
        timestamp,
    })
}
