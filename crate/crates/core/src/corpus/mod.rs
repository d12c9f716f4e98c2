//! Dataset loading and the normalized catalog + interaction log.
//!
//! Raw datasets (ML-1M, Goodreads, Amazon Beauty, Serendipity-2018) are
//! parsed into a [`Catalog`] of items and a chronological log of
//! [`Interaction`]s. Rows that cannot be used are dropped, never silently:
//! the [`LoadReport`] accounts for every input row.

mod amazon;
mod goodreads;
mod ml1m;
mod normalized;
mod seren2018;

pub use normalized::{read_normalized, write_normalized};
pub use seren2018::{load_answers, AnswerRow};

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing file: {0}")]
    MissingFile(String),
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed row {row} in {path}: {reason}")]
    Malformed {
        path: String,
        row: usize,
        reason: String,
    },
    #[error("duplicate item id in catalog: {0}")]
    DuplicateItem(String),
    #[error("zero usable interactions after loading {0}")]
    NoUsableInteractions(String),
}

/// Catalog entry: an item's identifier, display name and category labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub item_id: String,
    pub name: String,
    pub categories: Vec<String>,
}

impl ItemRecord {
    /// Build a record, trimming whitespace and dropping empty category
    /// strings. An empty name falls back to the item id so the record
    /// always has displayable text.
    pub fn new(item_id: impl Into<String>, name: &str, categories: Vec<String>) -> Self {
        let item_id = item_id.into();
        let name = name.trim();
        let name = if name.is_empty() {
            item_id.clone()
        } else {
            name.to_string()
        };
        let categories = categories
            .into_iter()
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .collect();
        Self {
            item_id,
            name,
            categories,
        }
    }
}

/// One logged user-item event with its five-level rating.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub user_id: String,
    pub item_id: String,
    pub rating: u8,
    pub timestamp: i64,
}

/// Immutable item catalog with a precomputed distinct-category count.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    items: BTreeMap<String, ItemRecord>,
    category_count: usize,
}

impl Catalog {
    pub fn from_items(items: Vec<ItemRecord>) -> Result<Self, CorpusError> {
        let mut map = BTreeMap::new();
        for item in items {
            let id = item.item_id.clone();
            if map.insert(id.clone(), item).is_some() {
                return Err(CorpusError::DuplicateItem(id));
            }
        }
        let category_count = map
            .values()
            .flat_map(|i| i.categories.iter())
            .collect::<BTreeSet<_>>()
            .len();
        Ok(Self {
            items: map,
            category_count,
        })
    }

    pub fn get(&self, item_id: &str) -> Option<&ItemRecord> {
        self.items.get(item_id)
    }

    pub fn contains(&self, item_id: &str) -> bool {
        self.items.contains_key(item_id)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Items in ascending item-id order.
    pub fn iter(&self) -> impl Iterator<Item = &ItemRecord> {
        self.items.values()
    }

    /// Item ids in ascending order.
    pub fn item_ids(&self) -> impl Iterator<Item = &str> {
        self.items.keys().map(String::as_str)
    }

    /// Number of distinct category strings across all items.
    pub fn category_count(&self) -> usize {
        self.category_count
    }
}

/// Accounting for one load: every input row is either kept or shows up in
/// one of the drop buckets.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LoadReport {
    pub input_rows: usize,
    pub loaded: usize,
    /// (row index, reason) for rows that failed to parse. Row indexes are
    /// zero-based within the interaction file.
    pub malformed: Vec<(usize, String)>,
    /// Rows whose item id did not resolve in the catalog.
    pub unresolved_items: usize,
    /// Rows displaced by a later interaction for the same (user, item).
    pub duplicates_dropped: usize,
}

impl LoadReport {
    pub fn dropped(&self) -> usize {
        self.malformed.len() + self.unresolved_items + self.duplicates_dropped
    }
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "rows={} loaded={} malformed={} unresolved_items={} duplicates_dropped={}",
            self.input_rows,
            self.loaded,
            self.malformed.len(),
            self.unresolved_items,
            self.duplicates_dropped
        )?;
        for (row, reason) in &self.malformed {
            writeln!(f, "  malformed row {row}: {reason}")?;
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct LoadedDataset {
    pub catalog: Catalog,
    pub interactions: Vec<Interaction>,
    pub report: LoadReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    Ml1m,
    Goodreads,
    AmazonBeauty,
    Serendipity2018,
}

impl std::str::FromStr for DatasetFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ml1m" => Ok(Self::Ml1m),
            "goodreads" => Ok(Self::Goodreads),
            "amazon_beauty" => Ok(Self::AmazonBeauty),
            "serendipity2018" => Ok(Self::Serendipity2018),
            other => Err(format!("unknown dataset format: {other}")),
        }
    }
}

/// Load a raw dataset directory into a catalog and interaction log.
///
/// Interactions referencing items absent from the catalog are dropped and
/// counted; duplicate (user, item) pairs keep the latest-timestamp row.
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<LoadedDataset, CorpusError> {
    let (catalog, raw) = match format {
        DatasetFormat::Ml1m => ml1m::load(path)?,
        DatasetFormat::Goodreads => goodreads::load(path)?,
        DatasetFormat::AmazonBeauty => amazon::load(path)?,
        DatasetFormat::Serendipity2018 => seren2018::load(path)?,
    };
    finish_load(path, catalog, raw)
}

/// Raw parse output: interactions that survived parsing plus per-row drops.
pub(crate) struct RawLog {
    pub rows: Vec<Interaction>,
    pub input_rows: usize,
    pub malformed: Vec<(usize, String)>,
}

fn finish_load(
    path: &Path,
    catalog: Catalog,
    raw: RawLog,
) -> Result<LoadedDataset, CorpusError> {
    let mut report = LoadReport {
        input_rows: raw.input_rows,
        malformed: raw.malformed,
        ..Default::default()
    };

    // Resolve against the catalog, then keep the latest row per (user, item).
    let mut slots: Vec<Option<Interaction>> = Vec::with_capacity(raw.rows.len());
    let mut latest: HashMap<(String, String), usize> = HashMap::new();
    for inter in raw.rows {
        if !catalog.contains(&inter.item_id) {
            report.unresolved_items += 1;
            continue;
        }
        let key = (inter.user_id.clone(), inter.item_id.clone());
        let idx = slots.len();
        match latest.get(&key) {
            Some(&prev) => {
                let keep_new = slots[prev]
                    .as_ref()
                    .map(|p| inter.timestamp >= p.timestamp)
                    .unwrap_or(true);
                if keep_new {
                    slots[prev] = None;
                    slots.push(Some(inter));
                    latest.insert(key, idx);
                } else {
                    slots.push(None);
                }
                report.duplicates_dropped += 1;
            }
            None => {
                latest.insert(key, idx);
                slots.push(Some(inter));
            }
        }
    }
    let interactions: Vec<Interaction> = slots.into_iter().flatten().collect();
    report.loaded = interactions.len();
    debug_assert_eq!(report.loaded + report.dropped(), report.input_rows);

    if interactions.is_empty() {
        return Err(CorpusError::NoUsableInteractions(path.display().to_string()));
    }
    Ok(LoadedDataset {
        catalog,
        interactions,
        report,
    })
}

/// Quote a token when it would be ambiguous inside the rendered item text:
/// commas, quotes, parentheses, or the literal empty-category marker.
fn escape_token(s: &str) -> String {
    let needs_quotes = s.contains(',')
        || s.contains('"')
        || s.contains('(')
        || s.contains(')')
        || s == "uncategorized";
    if needs_quotes {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Deterministic single-line rendering of an item for prompt text:
/// `name (category1, category2, ...)`, or `name (uncategorized)` when the
/// item has no categories. Category order is preserved.
pub fn serialize_item_text(item: &ItemRecord) -> String {
    let name = escape_token(&item.name);
    if item.categories.is_empty() {
        format!("{name} (uncategorized)")
    } else {
        let cats: Vec<String> = item.categories.iter().map(|c| escape_token(c)).collect();
        format!("{} ({})", name, cats.join(", "))
    }
}

/// The user's last `n` interactions strictly before `before`, oldest first.
///
/// The log is expected to already hold positive interactions (apply
/// [`crate::split::to_implicit`] first). Equal timestamps keep input order.
/// An unknown user yields an empty list.
pub fn build_history(
    log: &[Interaction],
    user_id: &str,
    n: usize,
    before: i64,
) -> Vec<String> {
    assert!(n >= 1, "history length must be at least 1");
    let mut rows: Vec<(i64, usize, &str)> = log
        .iter()
        .enumerate()
        .filter(|(_, i)| i.user_id == user_id && i.timestamp < before)
        .map(|(idx, i)| (i.timestamp, idx, i.item_id.as_str()))
        .collect();
    rows.sort_by_key(|&(ts, idx, _)| (ts, idx));
    let skip = rows.len().saturating_sub(n);
    rows[skip..].iter().map(|&(_, _, id)| id.to_string()).collect()
}

/// Post-load dataset statistics over the interaction log: distinct users,
/// distinct items, interaction count, and distinct categories among the
/// interacted items.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    pub categories: usize,
}

pub fn dataset_stats(catalog: &Catalog, interactions: &[Interaction]) -> DatasetStats {
    let mut users = HashSet::new();
    let mut items = HashSet::new();
    for inter in interactions {
        users.insert(inter.user_id.as_str());
        items.insert(inter.item_id.as_str());
    }
    let categories = items
        .iter()
        .filter_map(|id| catalog.get(id))
        .flat_map(|item| item.categories.iter())
        .collect::<HashSet<_>>()
        .len();
    DatasetStats {
        users: users.len(),
        items: items.len(),
        interactions: interactions.len(),
        categories,
    }
}

/// Optional minimum-interaction filter (single pass, default off in the
/// pipeline). Keeps rows whose user and item both meet the thresholds.
pub fn filter_min_counts(
    interactions: &[Interaction],
    min_user: usize,
    min_item: usize,
) -> Vec<Interaction> {
    let mut user_counts: HashMap<&str, usize> = HashMap::new();
    let mut item_counts: HashMap<&str, usize> = HashMap::new();
    for inter in interactions {
        *user_counts.entry(&inter.user_id).or_default() += 1;
        *item_counts.entry(&inter.item_id).or_default() += 1;
    }
    interactions
        .iter()
        .filter(|i| {
            user_counts[i.user_id.as_str()] >= min_user
                && item_counts[i.item_id.as_str()] >= min_item
        })
        .cloned()
        .collect()
}

pub(crate) fn read_lines(path: &Path) -> Result<Vec<String>, CorpusError> {
    if !path.exists() {
        return Err(CorpusError::MissingFile(path.display().to_string()));
    }
    let bytes = std::fs::read(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    // ML-1M metadata is Latin-1; mapping bytes to the first 256 codepoints
    // is lossless for it and a no-op for plain ASCII.
    let text: String = if std::str::from_utf8(&bytes).is_ok() {
        String::from_utf8(bytes).unwrap()
    } else {
        bytes.iter().map(|&b| b as char).collect()
    };
    Ok(text.lines().map(str::to_string).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: &str, name: &str, cats: &[&str]) -> ItemRecord {
        ItemRecord::new(id, name, cats.iter().map(|c| c.to_string()).collect())
    }

    fn inter(u: &str, i: &str, r: u8, ts: i64) -> Interaction {
        Interaction {
            user_id: u.into(),
            item_id: i.into(),
            rating: r,
            timestamp: ts,
        }
    }

    #[test]
    fn serialize_plain_item() {
        let it = item("1", "Toy Story", &["Animation", "Comedy"]);
        assert_eq!(serialize_item_text(&it), "Toy Story (Animation, Comedy)");
    }

    #[test]
    fn serialize_uncategorized() {
        let it = item("1", "X", &[]);
        assert_eq!(serialize_item_text(&it), "X (uncategorized)");
    }

    #[test]
    fn serialize_preserves_category_order() {
        let a = item("1", "X", &["A", "B"]);
        let b = item("1", "X", &["B", "A"]);
        assert_ne!(serialize_item_text(&a), serialize_item_text(&b));
    }

    #[test]
    fn serialize_escapes_commas_and_marker() {
        let it = item("1", "Hello, World", &["D, E"]);
        assert_eq!(serialize_item_text(&it), "\"Hello, World\" (\"D, E\")");
        let tricky = item("1", "X", &["uncategorized"]);
        assert_eq!(serialize_item_text(&tricky), "X (\"uncategorized\")");
        let empty = item("2", "X", &[]);
        assert_eq!(serialize_item_text(&empty), "X (uncategorized)");
        assert_ne!(serialize_item_text(&tricky), serialize_item_text(&empty));
    }

    #[test]
    fn history_takes_latest_n_oldest_first() {
        let log: Vec<Interaction> = (0..12).map(|k| inter("u", &format!("i{k}"), 5, k)).collect();
        let h = build_history(&log, "u", 10, i64::MAX);
        assert_eq!(h.len(), 10);
        assert_eq!(h.first().unwrap(), "i2");
        assert_eq!(h.last().unwrap(), "i11");
    }

    #[test]
    fn history_short_user_returns_all() {
        let log: Vec<Interaction> = (0..4).map(|k| inter("u", &format!("i{k}"), 4, k)).collect();
        assert_eq!(build_history(&log, "u", 10, i64::MAX).len(), 4);
        assert!(build_history(&log, "nobody", 10, i64::MAX).is_empty());
    }

    #[test]
    fn history_is_strictly_before_cutoff() {
        let log = vec![inter("u", "a", 5, 10), inter("u", "b", 5, 11)];
        assert_eq!(build_history(&log, "u", 10, 11), vec!["a".to_string()]);
    }

    #[test]
    fn history_ties_break_by_input_order() {
        // Brute-force oracle: stable sort of (ts, input index) must agree
        // with build_history on a fixture full of timestamp ties.
        let mut log = Vec::new();
        for k in 0..50 {
            log.push(inter("u", &format!("i{k}"), 5, (k % 7) as i64));
        }
        let got = build_history(&log, "u", 10, i64::MAX);
        let mut oracle: Vec<(i64, usize, String)> = log
            .iter()
            .enumerate()
            .map(|(idx, i)| (i.timestamp, idx, i.item_id.clone()))
            .collect();
        oracle.sort();
        let want: Vec<String> = oracle[40..].iter().map(|(_, _, id)| id.clone()).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn catalog_counts_distinct_categories() {
        let cat = Catalog::from_items(vec![
            item("1", "A", &["X", "Y"]),
            item("2", "B", &["Y", "Z"]),
        ])
        .unwrap();
        assert_eq!(cat.category_count(), 3);
    }

    #[test]
    fn catalog_rejects_duplicate_ids() {
        assert!(Catalog::from_items(vec![item("1", "A", &[]), item("1", "B", &[])]).is_err());
    }

    #[test]
    fn dedup_keeps_latest_timestamp() {
        let catalog = Catalog::from_items(vec![item("i", "I", &[])]).unwrap();
        let raw = RawLog {
            rows: vec![inter("u", "i", 3, 5), inter("u", "i", 5, 9), inter("u", "i", 4, 7)],
            input_rows: 3,
            malformed: vec![],
        };
        let loaded = finish_load(Path::new("x"), catalog, raw).unwrap();
        assert_eq!(loaded.interactions.len(), 1);
        assert_eq!(loaded.interactions[0].timestamp, 9);
        assert_eq!(loaded.report.duplicates_dropped, 2);
        assert_eq!(loaded.report.loaded + loaded.report.dropped(), 3);
    }

    #[test]
    fn unresolved_items_are_dropped_and_counted() {
        let catalog = Catalog::from_items(vec![item("known", "K", &[])]).unwrap();
        let raw = RawLog {
            rows: vec![inter("u", "known", 4, 1), inter("u", "ghost", 4, 2)],
            input_rows: 2,
            malformed: vec![],
        };
        let loaded = finish_load(Path::new("x"), catalog, raw).unwrap();
        assert_eq!(loaded.interactions.len(), 1);
        assert_eq!(loaded.report.unresolved_items, 1);
    }

    #[test]
    fn min_count_filter() {
        let log = vec![
            inter("u1", "a", 5, 1),
            inter("u1", "b", 5, 2),
            inter("u2", "a", 5, 3),
        ];
        let kept = filter_min_counts(&log, 2, 1);
        assert_eq!(kept.len(), 2);
        assert!(kept.iter().all(|i| i.user_id == "u1"));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn token() -> impl Strategy<Value = String> {
            proptest::string::string_regex("[a-c(),\" ]{0,6}|uncategorized").expect("regex")
        }

        proptest! {
            #[test]
            fn serialize_is_injective(
                name_a in token(), cats_a in proptest::collection::vec(token(), 0..4),
                name_b in token(), cats_b in proptest::collection::vec(token(), 0..4),
            ) {
                // Construction trims and drops empties, so compare the
                // records, not the raw inputs.
                let a = ItemRecord { item_id: "x".into(), name: name_a, categories: cats_a };
                let b = ItemRecord { item_id: "x".into(), name: name_b, categories: cats_b };
                if (&a.name, &a.categories) != (&b.name, &b.categories) {
                    prop_assert_ne!(serialize_item_text(&a), serialize_item_text(&b));
                }
            }

            #[test]
            fn history_is_sorted_and_respects_cutoff(
                rows in proptest::collection::vec((0i64..40, 0usize..8), 1..60),
                n in 1usize..12,
                before in 0i64..45,
            ) {
                let log: Vec<Interaction> = rows
                    .iter()
                    .enumerate()
                    .map(|(idx, &(ts, item))| Interaction {
                        user_id: "u".into(),
                        item_id: format!("i{item}-{idx}"),
                        rating: 5,
                        timestamp: ts,
                    })
                    .collect();
                let history = build_history(&log, "u", n, before);
                prop_assert!(history.len() <= n);
                let ts_of = |id: &str| log.iter().find(|i| i.item_id == id).unwrap().timestamp;
                let stamps: Vec<i64> = history.iter().map(|id| ts_of(id)).collect();
                prop_assert!(stamps.windows(2).all(|w| w[0] <= w[1]));
                prop_assert!(stamps.iter().all(|&ts| ts < before));
            }
        }
    }

    #[test]
    fn stats_count_interacted_items_only() {
        let catalog = Catalog::from_items(vec![
            item("a", "A", &["X"]),
            item("b", "B", &["Y"]),
            item("unrated", "U", &["Z"]),
        ])
        .unwrap();
        let log = vec![inter("u1", "a", 5, 1), inter("u2", "b", 4, 2)];
        let stats = dataset_stats(&catalog, &log);
        assert_eq!(
            stats,
            DatasetStats { users: 2, items: 2, interactions: 2, categories: 2 }
        );
    }
}
