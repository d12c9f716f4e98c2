//! Serendipity-2018 loader: CSV answers file with the six
//! serendipity-question columns, movie metadata, and (optionally) the
//! historical ratings file.
//!
//! Expected layout: `movies.csv` (`movieId,title,genres` with `|`-separated
//! genres), `answers.csv` (`userId,movieId,rating,timestamp` plus the
//! question columns, `q1`..`q6` by default), and an optional `ratings.csv`
//! (`userId,movieId,rating,timestamp`) used for richer user histories.

use std::path::Path;

use super::{Catalog, CorpusError, Interaction, ItemRecord, RawLog};

pub const DEFAULT_QUESTION_COLUMNS: [&str; 6] = ["q1", "q2", "q3", "q4", "q5", "q6"];

/// One survey row: the rated movie plus the six question responses
/// (missing answers are `None` and exclude the row from label derivation).
#[derive(Debug, Clone)]
pub struct AnswerRow {
    pub user_id: String,
    pub item_id: String,
    pub rating: u8,
    pub timestamp: i64,
    pub responses: Vec<Option<u8>>,
}

pub(crate) fn load(dir: &Path) -> Result<(Catalog, RawLog), CorpusError> {
    let catalog = load_movies(dir)?;

    let answers_path = dir.join("answers.csv");
    let mut rows = Vec::new();
    let mut malformed = Vec::new();
    let mut input_rows = 0usize;
    read_interaction_csv(&answers_path, &mut rows, &mut malformed, &mut input_rows)?;

    let ratings_path = dir.join("ratings.csv");
    if ratings_path.exists() {
        read_interaction_csv(&ratings_path, &mut rows, &mut malformed, &mut input_rows)?;
    }
    Ok((catalog, RawLog { rows, input_rows, malformed }))
}

fn load_movies(dir: &Path) -> Result<Catalog, CorpusError> {
    let movies_path = dir.join("movies.csv");
    if !movies_path.exists() {
        return Err(CorpusError::MissingFile(movies_path.display().to_string()));
    }
    let mut reader = csv::Reader::from_path(&movies_path).map_err(|e| CorpusError::Malformed {
        path: movies_path.display().to_string(),
        row: 0,
        reason: e.to_string(),
    })?;
    let mut items = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CorpusError::Malformed {
            path: movies_path.display().to_string(),
            row,
            reason: e.to_string(),
        })?;
        if record.len() < 2 {
            return Err(CorpusError::Malformed {
                path: movies_path.display().to_string(),
                row,
                reason: "expected movieId,title[,genres]".into(),
            });
        }
        let genres = record
            .get(2)
            .map(|g| g.split('|').map(str::to_string).collect())
            .unwrap_or_default();
        items.push(ItemRecord::new(record[0].trim(), &record[1], genres));
    }
    Catalog::from_items(items)
}

fn read_interaction_csv(
    path: &Path,
    rows: &mut Vec<Interaction>,
    malformed: &mut Vec<(usize, String)>,
    input_rows: &mut usize,
) -> Result<(), CorpusError> {
    if !path.exists() {
        return Err(CorpusError::MissingFile(path.display().to_string()));
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Malformed {
            path: path.display().to_string(),
            row: 0,
            reason: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (u, m, r, t) = match (col("userId"), col("movieId"), col("rating"), col("timestamp")) {
        (Some(u), Some(m), Some(r), Some(t)) => (u, m, r, t),
        _ => {
            return Err(CorpusError::Malformed {
                path: path.display().to_string(),
                row: 0,
                reason: "header must contain userId,movieId,rating,timestamp".into(),
            })
        }
    };
    for (row, record) in reader.records().enumerate() {
        *input_rows += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                malformed.push((row, e.to_string()));
                continue;
            }
        };
        match parse_fields(&record, u, m, r, t) {
            Ok(inter) => rows.push(inter),
            Err(reason) => malformed.push((row, reason)),
        }
    }
    Ok(())
}

fn parse_fields(
    record: &csv::StringRecord,
    u: usize,
    m: usize,
    r: usize,
    t: usize,
) -> Result<Interaction, String> {
    let field = |i: usize| record.get(i).ok_or_else(|| format!("missing field {i}"));
    let rating = parse_rating(field(r)?)?;
    let timestamp: i64 = field(t)?
        .trim()
        .parse()
        .map_err(|_| format!("bad timestamp: {:?}", record.get(t)))?;
    Ok(Interaction {
        user_id: field(u)?.trim().to_string(),
        item_id: field(m)?.trim().to_string(),
        rating,
        timestamp,
    })
}

/// MovieLens-style ratings allow half stars; round half up into 1..=5.
fn parse_rating(s: &str) -> Result<u8, String> {
    let value: f64 = s.trim().parse().map_err(|_| format!("bad rating: {s:?}"))?;
    if !(0.5..=5.0).contains(&value) {
        return Err(format!("rating out of range: {value}"));
    }
    Ok(((value + 0.5).floor() as u8).clamp(1, 5))
}

/// Read the answers file keeping the raw question responses, for ground
/// truth derivation. `question_columns` defaults to
/// [`DEFAULT_QUESTION_COLUMNS`]; unparseable or absent responses are kept
/// as `None` so the caller can exclude and count them.
pub fn load_answers(
    dir: &Path,
    question_columns: Option<&[String]>,
) -> Result<Vec<AnswerRow>, CorpusError> {
    let default: Vec<String> = DEFAULT_QUESTION_COLUMNS.iter().map(|s| s.to_string()).collect();
    let columns = question_columns.unwrap_or(&default);
    let path = dir.join("answers.csv");
    if !path.exists() {
        return Err(CorpusError::MissingFile(path.display().to_string()));
    }
    let mut reader = csv::Reader::from_path(&path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Malformed {
            path: path.display().to_string(),
            row: 0,
            reason: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (u, m, r, t) = match (col("userId"), col("movieId"), col("rating"), col("timestamp")) {
        (Some(u), Some(m), Some(r), Some(t)) => (u, m, r, t),
        _ => {
            return Err(CorpusError::Malformed {
                path: path.display().to_string(),
                row: 0,
                reason: "header must contain userId,movieId,rating,timestamp".into(),
            })
        }
    };
    let question_idx: Vec<Option<usize>> = columns.iter().map(|c| col(c)).collect();
    if question_idx.iter().any(Option::is_none) {
        return Err(CorpusError::Malformed {
            path: path.display().to_string(),
            row: 0,
            reason: format!("missing question columns (expected {columns:?})"),
        });
    }

    let mut answers = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CorpusError::Malformed {
            path: path.display().to_string(),
            row,
            reason: e.to_string(),
        })?;
        let base = match parse_fields(&record, u, m, r, t) {
            Ok(b) => b,
            Err(_) => continue, // already counted by load()'s report
        };
        let responses = question_idx
            .iter()
            .map(|idx| {
                record
                    .get(idx.unwrap())
                    .and_then(|v| v.trim().parse::<u8>().ok())
                    .filter(|v| (1..=5).contains(v))
            })
            .collect();
        answers.push(AnswerRow {
            user_id: base.user_id,
            item_id: base.item_id,
            rating: base.rating,
            timestamp: base.timestamp,
            responses,
        });
    }
    Ok(answers)
}
