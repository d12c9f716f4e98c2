//! Normalized on-disk format shared by all pipeline stages:
//! `interactions.tsv` (`user \t item \t rating \t ts`) and `catalog.tsv`
//! (`item \t name \t cat1|cat2|...`).

use std::io::Write;
use std::path::Path;

use super::{Catalog, CorpusError, Interaction, ItemRecord};

pub const INTERACTIONS_FILE: &str = "interactions.tsv";
pub const CATALOG_FILE: &str = "catalog.tsv";

// Tabs/newlines would break the TSV framing and '|' the category list;
// they are replaced on write.
fn clean(s: &str, pipe: bool) -> String {
    let mut out: String = s
        .chars()
        .map(|c| if c == '\t' || c == '\n' || c == '\r' { ' ' } else { c })
        .collect();
    if pipe {
        out = out.replace('|', "/");
    }
    out
}

pub fn write_normalized(
    dir: &Path,
    catalog: &Catalog,
    interactions: &[Interaction],
) -> Result<(), CorpusError> {
    std::fs::create_dir_all(dir).map_err(|source| CorpusError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let io_err = |path: &Path| {
        let p = path.display().to_string();
        move |source| CorpusError::Io { path: p.clone(), source }
    };

    let cat_path = dir.join(CATALOG_FILE);
    let mut out = Vec::new();
    for item in catalog.iter() {
        let cats: Vec<String> = item.categories.iter().map(|c| clean(c, true)).collect();
        writeln!(
            out,
            "{}\t{}\t{}",
            clean(&item.item_id, false),
            clean(&item.name, false),
            cats.join("|")
        )
        .expect("in-memory write");
    }
    std::fs::write(&cat_path, out).map_err(io_err(&cat_path))?;

    let int_path = dir.join(INTERACTIONS_FILE);
    let mut out = Vec::new();
    for inter in interactions {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            clean(&inter.user_id, false),
            clean(&inter.item_id, false),
            inter.rating,
            inter.timestamp
        )
        .expect("in-memory write");
    }
    std::fs::write(&int_path, out).map_err(io_err(&int_path))?;
    Ok(())
}

pub fn read_normalized(dir: &Path) -> Result<(Catalog, Vec<Interaction>), CorpusError> {
    let cat_path = dir.join(CATALOG_FILE);
    let mut items = Vec::new();
    for (row, line) in super::read_lines(&cat_path)?.iter().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(CorpusError::Malformed {
                path: cat_path.display().to_string(),
                row,
                reason: format!("expected 3 tab fields, got {}", fields.len()),
            });
        }
        let categories = if fields[2].is_empty() {
            Vec::new()
        } else {
            fields[2].split('|').map(str::to_string).collect()
        };
        items.push(ItemRecord::new(fields[0], fields[1], categories));
    }
    let catalog = Catalog::from_items(items)?;

    let int_path = dir.join(INTERACTIONS_FILE);
    let mut interactions = Vec::new();
    for (row, line) in super::read_lines(&int_path)?.iter().enumerate() {
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| CorpusError::Malformed {
            path: int_path.display().to_string(),
            row,
            reason,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 tab fields, got {}", fields.len())));
        }
        let rating: u8 = fields[2].parse().map_err(|_| err(format!("bad rating: {:?}", fields[2])))?;
        if !(1..=5).contains(&rating) {
            return Err(err(format!("rating out of range: {rating}")));
        }
        let timestamp: i64 = fields[3]
            .parse()
            .map_err(|_| err(format!("bad timestamp: {:?}", fields[3])))?;
        interactions.push(Interaction {
            user_id: fields[0].to_string(),
            item_id: fields[1].to_string(),
            rating,
            timestamp,
        });
    }
    Ok((catalog, interactions))
}
