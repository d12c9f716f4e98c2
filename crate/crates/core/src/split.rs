//! Implicit-feedback conversion and the temporal global three-fold split.
//!
//! The log is sorted chronologically and cut into 10 contiguous subsets of
//! size ⌊N/10⌋ (remainder on the last subset). Fold `f` trains on subsets
//! `f..=f+5`, validates on `f+6` and tests on `f+7`, so later folds shift
//! the window by one subset and no test interaction ever precedes a train
//! interaction.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Catalog, Interaction};

pub const SUBSET_COUNT: usize = 10;
pub const TRAIN_SUBSETS: usize = 6;
pub const FOLD_COUNT: usize = 3;

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("log too small: need at least {SUBSET_COUNT} interactions, got {0}")]
    LogTooSmall(usize),
    #[error("fold index out of range: {0} (expected 0..{FOLD_COUNT})")]
    BadFoldIndex(usize),
    #[error("negative-sampling ratio must be positive, got {0}")]
    BadRatio(f64),
    #[error("i/o error writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Train/validation/test partition for one temporal fold.
#[derive(Debug, Clone)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train: Vec<Interaction>,
    pub validation: Vec<Interaction>,
    pub test: Vec<Interaction>,
}

/// Keep interactions rated at or above `threshold` (ratings retained).
pub fn to_implicit(log: &[Interaction], threshold: u8) -> Vec<Interaction> {
    log.iter().filter(|i| i.rating >= threshold).cloned().collect()
}

/// Chronologically sorted copy of the log plus the 10 subset ranges.
/// Equal timestamps keep input order so boundaries are deterministic.
pub fn chronological_subsets(
    log: &[Interaction],
) -> Result<(Vec<Interaction>, Vec<Range<usize>>), SplitError> {
    if log.len() < SUBSET_COUNT {
        return Err(SplitError::LogTooSmall(log.len()));
    }
    let mut sorted: Vec<Interaction> = log.to_vec();
    sorted.sort_by_key(|i| i.timestamp); // stable: ties keep input order
    let base = sorted.len() / SUBSET_COUNT;
    let mut ranges = Vec::with_capacity(SUBSET_COUNT);
    for s in 0..SUBSET_COUNT {
        let start = s * base;
        let end = if s == SUBSET_COUNT - 1 { sorted.len() } else { start + base };
        ranges.push(start..end);
    }
    Ok((sorted, ranges))
}

pub fn temporal_global_split(log: &[Interaction], fold_index: usize) -> Result<FoldSplit, SplitError> {
    if fold_index >= FOLD_COUNT {
        return Err(SplitError::BadFoldIndex(fold_index));
    }
    let (sorted, ranges) = chronological_subsets(log)?;
    let train_range = ranges[fold_index].start..ranges[fold_index + TRAIN_SUBSETS - 1].end;
    let valid_range = ranges[fold_index + TRAIN_SUBSETS].clone();
    let test_range = ranges[fold_index + TRAIN_SUBSETS + 1].clone();
    Ok(FoldSplit {
        fold_index,
        train: sorted[train_range].to_vec(),
        validation: sorted[valid_range].to_vec(),
        test: sorted[test_range].to_vec(),
    })
}

/// Per-user negatives: ⌈ratio · |positives|⌉ items drawn uniformly without
/// replacement from catalog items the user never interacted with. A user
/// whose unseen pool is smaller than requested gets the whole pool.
/// Deterministic for a fixed seed regardless of input order.
pub fn sample_negatives(
    positives: &[Interaction],
    catalog: &Catalog,
    ratio: f64,
    seed: u64,
) -> Result<Vec<(String, String)>, SplitError> {
    if ratio.is_nan() || ratio <= 0.0 {
        return Err(SplitError::BadRatio(ratio));
    }
    let mut seen: BTreeMap<&str, HashSet<&str>> = BTreeMap::new();
    for inter in positives {
        seen.entry(&inter.user_id).or_default().insert(&inter.item_id);
    }
    let all_items: Vec<&str> = catalog.item_ids().collect();

    let mut out = Vec::new();
    for (user, items) in &seen {
        let mut pool: Vec<&str> = all_items
            .iter()
            .copied()
            .filter(|i| !items.contains(i))
            .collect();
        let want = ((ratio * items.len() as f64).ceil() as usize).min(pool.len());
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, user));
        // Partial Fisher-Yates: the first `want` slots end up uniform
        // without replacement.
        for k in 0..want {
            let j = k + (rand::Rng::gen_range(&mut rng, 0..(pool.len() - k) as u64) as usize);
            pool.swap(k, j);
            out.push((user.to_string(), pool[k].to_string()));
        }
    }
    Ok(out)
}

/// Stable sub-seed derivation, mixing a label into the run seed.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

/// Write `train.tsv` / `valid.tsv` / `test.tsv` plus a `fold.meta` with
/// the subset boundaries and the run seed.
pub fn write_fold_manifest(
    dir: &Path,
    split: &FoldSplit,
    boundaries: &[Range<usize>],
    seed: u64,
) -> Result<(), SplitError> {
    std::fs::create_dir_all(dir).map_err(|source| SplitError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let write_part = |name: &str, rows: &[Interaction]| -> Result<(), SplitError> {
        let path = dir.join(name);
        let mut out = Vec::new();
        for inter in rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                inter.user_id, inter.item_id, inter.rating, inter.timestamp
            )
            .expect("in-memory write");
        }
        std::fs::write(&path, out).map_err(|source| SplitError::Io {
            path: path.display().to_string(),
            source,
        })
    };
    write_part("train.tsv", &split.train)?;
    write_part("valid.tsv", &split.validation)?;
    write_part("test.tsv", &split.test)?;

    let mut meta = String::new();
    meta.push_str(&format!("fold\t{}\n", split.fold_index));
    meta.push_str(&format!("seed\t{}\n", seed));
    for (s, range) in boundaries.iter().enumerate() {
        meta.push_str(&format!("subset\t{}\t{}\t{}\n", s, range.start, range.end));
    }
    let meta_path = dir.join("fold.meta");
    std::fs::write(&meta_path, meta).map_err(|source| SplitError::Io {
        path: meta_path.display().to_string(),
        source,
    })
}

/// Read back one partition file written by [`write_fold_manifest`].
pub fn read_fold_part(path: &Path) -> Result<Vec<Interaction>, SplitError> {
    let body = std::fs::read_to_string(path).map_err(|source| SplitError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rows = Vec::new();
    for line in body.lines().filter(|l| !l.is_empty()) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(SplitError::Io {
                path: path.display().to_string(),
                source: std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("expected 4 tab fields, got {}", fields.len()),
                ),
            });
        }
        rows.push(Interaction {
            user_id: fields[0].to_string(),
            item_id: fields[1].to_string(),
            rating: fields[2].parse().map_err(|_| SplitError::Io {
                path: path.display().to_string(),
                source: std::io::Error::new(std::io::ErrorKind::InvalidData, "bad rating"),
            })?,
            timestamp: fields[3].parse().map_err(|_| SplitError::Io {
                path: path.display().to_string(),
                source: std::io::Error::new(std::io::ErrorKind::InvalidData, "bad timestamp"),
            })?,
        });
    }
    Ok(rows)
}
