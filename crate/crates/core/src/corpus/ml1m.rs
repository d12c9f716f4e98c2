//! MovieLens-1M loader: `::`-delimited `ratings.dat` and `movies.dat`.

use std::path::Path;

use super::{Catalog, CorpusError, Interaction, ItemRecord, RawLog};

pub(crate) fn load(dir: &Path) -> Result<(Catalog, RawLog), CorpusError> {
    let movies_path = dir.join("movies.dat");
    let mut items = Vec::new();
    for (row, line) in super::read_lines(&movies_path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split("::").collect();
        if fields.len() != 3 {
            return Err(CorpusError::Malformed {
                path: movies_path.display().to_string(),
                row,
                reason: format!("expected 3 '::' fields, got {}", fields.len()),
            });
        }
        let categories = fields[2]
            .split('|')
            .map(str::to_string)
            .collect::<Vec<_>>();
        items.push(ItemRecord::new(fields[0].trim(), fields[1], categories));
    }
    let catalog = Catalog::from_items(items)?;

    let ratings_path = dir.join("ratings.dat");
    let lines = super::read_lines(&ratings_path)?;
    let mut rows = Vec::with_capacity(lines.len());
    let mut malformed = Vec::new();
    let mut input_rows = 0usize;
    for (row, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        input_rows += 1;
        match parse_rating_line(line) {
            Ok(inter) => rows.push(inter),
            Err(reason) => malformed.push((row, reason)),
        }
    }
    Ok((catalog, RawLog { rows, input_rows, malformed }))
}

fn parse_rating_line(line: &str) -> Result<Interaction, String> {
    let fields: Vec<&str> = line.split("::").collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 '::' fields, got {}", fields.len()));
    }
    let rating: u8 = fields[2]
        .trim()
        .parse()
        .map_err(|_| format!("bad rating: {:?}", fields[2]))?;
    if !(1..=5).contains(&rating) {
        return Err(format!("rating out of range: {rating}"));
    }
    let timestamp: i64 = fields[3]
        .trim()
        .parse()
        .map_err(|_| format!("bad timestamp: {:?}", fields[3]))?;
    Ok(Interaction {
        user_id: fields[0].trim().to_string(),
        item_id: fields[1].trim().to_string(),
        rating,
        timestamp,
    })
}
