//! Goodreads loader: line-delimited JSON book metadata and interactions.
//!
//! Expected layout: `books.json` with one record per line carrying
//! `book_id`, `title`, and either `shelves` (list of strings) or
//! `popular_shelves` (list of `{name, ...}` objects); `interactions.json`
//! with `user_id`, `book_id`, `rating`, `timestamp` per line.

use std::path::Path;

use serde_json::Value;

use super::{Catalog, CorpusError, Interaction, ItemRecord, RawLog};

pub(crate) fn load(dir: &Path) -> Result<(Catalog, RawLog), CorpusError> {
    let books_path = dir.join("books.json");
    let mut items = Vec::new();
    for (row, line) in super::read_lines(&books_path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
            path: books_path.display().to_string(),
            row,
            reason: e.to_string(),
        })?;
        let book_id = scalar_string(&value["book_id"]).ok_or_else(|| CorpusError::Malformed {
            path: books_path.display().to_string(),
            row,
            reason: "missing book_id".into(),
        })?;
        let title = value["title"].as_str().unwrap_or_default();
        let shelves = shelf_names(&value);
        items.push(ItemRecord::new(book_id, title, shelves));
    }
    let catalog = Catalog::from_items(items)?;

    let inter_path = dir.join("interactions.json");
    let lines = super::read_lines(&inter_path)?;
    let mut rows = Vec::with_capacity(lines.len());
    let mut malformed = Vec::new();
    let mut input_rows = 0usize;
    for (row, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        input_rows += 1;
        match parse_interaction(line) {
            Ok(inter) => rows.push(inter),
            Err(reason) => malformed.push((row, reason)),
        }
    }
    Ok((catalog, RawLog { rows, input_rows, malformed }))
}

fn shelf_names(value: &Value) -> Vec<String> {
    if let Some(shelves) = value["shelves"].as_array() {
        return shelves
            .iter()
            .filter_map(|s| s.as_str())
            .map(str::to_string)
            .collect();
    }
    if let Some(shelves) = value["popular_shelves"].as_array() {
        return shelves
            .iter()
            .filter_map(|s| s["name"].as_str())
            .map(str::to_string)
            .collect();
    }
    Vec::new()
}

fn scalar_string(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn scalar_i64(value: &Value) -> Option<i64> {
    match value {
        Value::Number(n) => n.as_i64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn parse_interaction(line: &str) -> Result<Interaction, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let user_id = scalar_string(&value["user_id"]).ok_or("missing user_id")?;
    let item_id = scalar_string(&value["book_id"]).ok_or("missing book_id")?;
    let rating = scalar_i64(&value["rating"]).ok_or("missing rating")?;
    if !(1..=5).contains(&rating) {
        return Err(format!("rating out of range: {rating}"));
    }
    let timestamp = scalar_i64(&value["timestamp"]).ok_or("missing timestamp")?;
    Ok(Interaction {
        user_id,
        item_id,
        rating: rating as u8,
        timestamp,
    })
}
