//! Rec-list interchange format: `user_id \t rank \t item_id \t score`,
//! ranks 1..k contiguous per user. Lets externally trained recommenders
//! feed the evaluation pipeline.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use super::{RecList, RecsysError};

pub fn write_reclist_file(path: &Path, lists: &[RecList]) -> Result<(), RecsysError> {
    let mut out = Vec::new();
    for list in lists {
        for (rank, (item, score)) in list.items.iter().enumerate() {
            writeln!(out, "{}\t{}\t{}\t{}", list.user_id, rank + 1, item, score)
                .expect("in-memory write");
        }
    }
    std::fs::write(path, out).map_err(|source| RecsysError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Read an interchange file. Returns the lists (file order) and any
/// non-fatal warnings (non-monotone scores keep their order).
pub fn read_reclist_file(path: &Path) -> Result<(Vec<RecList>, Vec<String>), RecsysError> {
    let body = std::fs::read_to_string(path).map_err(|source| RecsysError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lists: Vec<RecList> = Vec::new();
    let mut warnings = Vec::new();
    let mut seen_users: HashSet<String> = HashSet::new();
    let mut current: Option<(RecList, HashSet<String>)> = None;

    for (idx, line) in body.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let malformed = |reason: String| RecsysError::MalformedRecList { line: lineno, reason };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(malformed(format!("expected 4 tab fields, got {}", fields.len())));
        }
        let user = fields[0];
        let rank: usize = fields[1]
            .parse()
            .map_err(|_| malformed(format!("bad rank: {:?}", fields[1])))?;
        let item = fields[2];
        let score: f64 = fields[3]
            .parse()
            .map_err(|_| malformed(format!("bad score: {:?}", fields[3])))?;

        let start_new = match &current {
            Some((list, _)) => list.user_id != user,
            None => true,
        };
        if start_new {
            if let Some((done, _)) = current.take() {
                lists.push(done);
            }
            if !seen_users.insert(user.to_string()) {
                return Err(malformed(format!("user {user} appears in two separate blocks")));
            }
            if rank != 1 {
                return Err(malformed(format!("user {user} starts at rank {rank}, expected 1")));
            }
            current = Some((
                RecList { user_id: user.to_string(), items: Vec::new() },
                HashSet::new(),
            ));
        }
        let (list, items_seen) = current.as_mut().expect("current list exists");
        if rank != list.items.len() + 1 {
            return Err(malformed(format!(
                "rank {rank} not contiguous (expected {})",
                list.items.len() + 1
            )));
        }
        if !items_seen.insert(item.to_string()) {
            return Err(RecsysError::DuplicateRecItem {
                user: user.to_string(),
                item: item.to_string(),
            });
        }
        if let Some((_, last_score)) = list.items.last() {
            if score > *last_score {
                warnings.push(format!(
                    "line {lineno}: score {score} exceeds previous {last_score} for user {user}; order kept"
                ));
            }
        }
        list.items.push((item.to_string(), score));
    }
    if let Some((done, _)) = current.take() {
        lists.push(done);
    }
    Ok((lists, warnings))
}
