//! Fixture generators for the acceptance suite: layout-faithful synthetic
//! datasets whose ground-truth statistics are known by construction.
//!
//! Shared by several test targets; not every target uses every helper.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

pub struct Ml1mSpec {
    pub users: usize,
    pub items: usize,
    pub positives: usize,
    pub categories: usize,
    pub groups: usize,
    /// Extra sub-threshold (rating < 4) rows, dropped by implicit conversion.
    pub negative_rows: usize,
    /// Catalog entries beyond `items` that never receive a positive.
    pub extra_movies: usize,
    pub seed: u64,
}

/// Splitmix-style generator; enough randomness for fixtures, fully
/// deterministic.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_add(0x9e3779b97f4a7c15))
    }

    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next() % n.max(1) as u64) as usize
    }
}

/// Write an ML-1M-layout dataset with exactly the requested post-implicit
/// statistics: `users` distinct users, `items` distinct positive items,
/// `positives` rating-4/5 rows, and `categories` distinct genres among the
/// positive items. Preferences are group-structured so ranking models have
/// signal to learn. Timestamps interleave users across the whole range so
/// every temporal subset sees every user.
pub fn write_ml1m(dir: &Path, spec: &Ml1mSpec) {
    std::fs::create_dir_all(dir).unwrap();
    let mut rng = Rng::new(spec.seed);

    // movies.dat: `items` positive-eligible movies plus unrated extras.
    // Genre assignment covers exactly `categories` distinct labels.
    let total_movies = spec.items + spec.extra_movies;
    let mut movies = String::new();
    for m in 0..total_movies {
        let g1 = m % spec.categories;
        let g2 = (m / spec.categories) % spec.categories;
        let title = if m % 97 == 0 {
            format!("Picture {m}, The ({})", 1930 + m % 70)
        } else {
            format!("Picture {m} ({})", 1930 + m % 70)
        };
        let _ = writeln!(movies, "{}::{}::Genre{g1}|Genre{g2}", m + 1, title);
    }
    std::fs::write(dir.join("movies.dat"), movies).unwrap();

    // Positive (user, item) pairs: coverage pass first (every item gets one
    // positive), then group-biased fill without duplicates.
    assert!(spec.positives >= spec.users.max(spec.items));
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(spec.positives);
    let mut seen: Vec<std::collections::HashSet<usize>> =
        vec![std::collections::HashSet::new(); spec.users];

    let mut counts = vec![0usize; spec.users];
    let base = spec.positives / spec.users;
    let remainder = spec.positives % spec.users;
    for (u, count) in counts.iter_mut().enumerate() {
        *count = base + usize::from(u < remainder);
    }

    // Coverage: item k goes to user (k * 7 + 1) mod users (bounded by that
    // user's quota; leftovers spill to the next user).
    let mut cursor = 0usize;
    for item in 0..spec.items {
        let mut u = (item * 7 + 1) % spec.users;
        while seen[u].len() >= counts[u] {
            cursor = (cursor + 1) % spec.users;
            u = cursor;
        }
        seen[u].insert(item);
        pairs.push((u, item));
    }
    // Group-biased fill.
    let group_of = |x: usize, n: usize| x * spec.groups / n.max(1);
    for u in 0..spec.users {
        let user_group = group_of(u, spec.users);
        while seen[u].len() < counts[u] {
            let item = if rng.below(100) < 90 {
                // In-group item, popularity-skewed toward low indices.
                let group_items = spec.items / spec.groups;
                let offset = {
                    let a = rng.below(group_items);
                    let b = rng.below(group_items);
                    a.min(b)
                };
                (user_group * group_items + offset).min(spec.items - 1)
            } else {
                rng.below(spec.items)
            };
            if seen[u].insert(item) {
                pairs.push((u, item));
            }
        }
    }
    assert_eq!(pairs.len(), spec.positives);

    // Sub-threshold rows on the extra movies (and spares), never colliding
    // with positive pairs.
    let mut rows: Vec<(usize, usize, u8)> =
        pairs.iter().map(|&(u, i)| (u, i, 4 + (u + i) as u8 % 2)).collect();
    let mut added = 0usize;
    while added < spec.negative_rows {
        let u = rng.below(spec.users);
        let item = spec.items + rng.below(spec.extra_movies.max(1));
        if item < total_movies && seen[u].insert(item) {
            rows.push((u, item, 1 + (added % 3) as u8));
            added += 1;
        }
    }

    // Deterministic shuffle, then strictly increasing timestamps.
    for idx in (1..rows.len()).rev() {
        let j = rng.below(idx + 1);
        rows.swap(idx, j);
    }
    let mut ratings = String::with_capacity(rows.len() * 24);
    for (n, (u, item, rating)) in rows.iter().enumerate() {
        let _ = writeln!(
            ratings,
            "{}::{}::{}::{}",
            u + 1,
            item + 1,
            rating,
            978_300_000 + n as i64
        );
    }
    std::fs::write(dir.join("ratings.dat"), ratings).unwrap();
}

/// Response-vector variants per target label; every vector's half-up
/// rounded mean equals the target, and the sums 9/15/21/27 sit exactly on
/// the .5 boundary so the fixture pins the rounding rule.
pub fn response_variants(target: u8) -> &'static [[u8; 6]] {
    match target {
        1 => &[[1, 1, 1, 1, 1, 1], [1, 1, 1, 1, 1, 2], [1, 1, 2, 1, 2, 1]],
        2 => &[
            [1, 1, 1, 2, 2, 2], // sum 9, mean 1.5
            [2, 2, 2, 2, 2, 2],
            [1, 2, 2, 3, 2, 3],
            [3, 3, 2, 2, 2, 2],
            [1, 1, 2, 2, 2, 2],
        ],
        3 => &[
            [1, 2, 2, 3, 3, 4], // sum 15, mean 2.5
            [3, 3, 3, 3, 3, 3],
            [2, 3, 3, 2, 4, 3],
            [4, 4, 3, 3, 3, 3],
            [2, 2, 3, 3, 3, 3],
        ],
        4 => &[
            [3, 4, 3, 4, 3, 4], // sum 21, mean 3.5
            [4, 4, 4, 4, 4, 4],
            [5, 4, 4, 4, 4, 4],
            [3, 4, 4, 4, 3, 4],
            [5, 5, 4, 4, 4, 4],
        ],
        5 => &[
            [5, 5, 4, 5, 4, 4], // sum 27, mean 4.5
            [5, 5, 5, 5, 5, 5],
            [5, 5, 5, 4, 5, 4],
        ],
        _ => unreachable!("labels are 1..=5"),
    }
}

/// The published Serendipity-2018 label distribution.
pub const SEREN2018_DISTRIBUTION: [usize; 5] = [321, 1022, 586, 208, 13];

/// Write a Serendipity-2018-layout dataset whose derived label counts
/// equal [`SEREN2018_DISTRIBUTION`] by construction: 430 users × 5
/// answers, each user with 12 historical positives predating every answer.
/// History movies live in ids 1..=400, answer candidates in 401..=500.
///
/// Every label's (last-10 history, candidate) pair is globally unique,
/// asserted below: the judge treats identical prompts as one item, so the
/// fixture must never hand two labels the same prompt.
pub fn write_seren2018(dir: &Path) {
    std::fs::create_dir_all(dir).unwrap();
    let mut rng = Rng::new(0x5e7e2018);

    let mut movies = String::from("movieId,title,genres\n");
    for m in 1..=500 {
        let _ = writeln!(movies, "{m},Feature {m},S{}|S{}", m % 12, (m + 5) % 12);
    }
    std::fs::write(dir.join("movies.csv"), movies).unwrap();

    // 12 distinct history movies per user, randomized.
    let mut histories: Vec<Vec<usize>> = Vec::with_capacity(430);
    for _ in 0..430usize {
        let mut picks = Vec::with_capacity(12);
        while picks.len() < 12 {
            let movie = 1 + rng.below(400);
            if !picks.contains(&movie) {
                picks.push(movie);
            }
        }
        histories.push(picks);
    }
    let mut ratings = String::from("userId,movieId,rating,timestamp\n");
    for (user, picks) in histories.iter().enumerate() {
        for (j, movie) in picks.iter().enumerate() {
            let rating = 4 + (user + j) % 2;
            let _ = writeln!(ratings, "u{user},{movie},{rating},{}", 1_000_000 + user * 100 + j);
        }
    }
    std::fs::write(dir.join("ratings.csv"), ratings).unwrap();

    // Deal the 2150 label targets to (user, slot) pairs in order.
    let mut targets = Vec::with_capacity(2150);
    for (level, &count) in SEREN2018_DISTRIBUTION.iter().enumerate() {
        targets.extend(std::iter::repeat((level + 1) as u8).take(count));
    }
    assert_eq!(targets.len(), 2150);

    let mut used = vec![0usize; 6];
    let mut candidates: Vec<Vec<usize>> = vec![Vec::new(); 430];
    let mut answers = String::from("userId,movieId,rating,timestamp,q1,q2,q3,q4,q5,q6\n");
    for (n, &target) in targets.iter().enumerate() {
        let user = n / 5;
        let slot = n % 5;
        let movie = 401 + (user * 7 + slot * 13) % 100;
        candidates[user].push(movie);
        let variants = response_variants(target);
        let qs = variants[used[target as usize] % variants.len()];
        used[target as usize] += 1;
        let _ = writeln!(
            answers,
            "u{user},{movie},4,{},{},{},{},{},{},{}",
            2_000_000 + n,
            qs[0],
            qs[1],
            qs[2],
            qs[3],
            qs[4],
            qs[5]
        );
    }
    std::fs::write(dir.join("answers.csv"), answers).unwrap();

    // Prompt-uniqueness check: answered movies are positives too, so the
    // history at slot s is the last 10 of (ratings + earlier answers).
    let mut seen_prompts: std::collections::HashSet<Vec<usize>> = std::collections::HashSet::new();
    for user in 0..430usize {
        let mut sequence = histories[user].clone();
        for slot in 0..5usize {
            let last10: Vec<usize> =
                sequence[sequence.len().saturating_sub(10)..].to_vec();
            let mut key = last10;
            key.push(usize::MAX); // separator
            key.push(candidates[user][slot]);
            assert!(seen_prompts.insert(key), "duplicate prompt for user {user} slot {slot}");
            sequence.push(candidates[user][slot]);
        }
    }
}

/// Small Goodreads-layout fixture.
pub fn write_goodreads(dir: &Path, users: usize, books: usize, per_user: usize) {
    std::fs::create_dir_all(dir).unwrap();
    let mut meta = String::new();
    for b in 1..=books {
        let _ = writeln!(
            meta,
            "{{\"book_id\": {b}, \"title\": \"Volume {b}\", \"shelves\": [\"shelf-{}\", \"shelf-{}\"]}}",
            b % 7,
            (b + 3) % 7
        );
    }
    std::fs::write(dir.join("books.json"), meta).unwrap();
    let mut inter = String::new();
    let mut ts = 500_000;
    for u in 0..users {
        for j in 0..per_user {
            let b = 1 + (u * 13 + j * 17) % books;
            let rating = 1 + (u + j) % 5;
            ts += 7;
            let _ = writeln!(
                inter,
                "{{\"user_id\": \"g{u}\", \"book_id\": {b}, \"rating\": {rating}, \"timestamp\": {ts}}}"
            );
        }
    }
    std::fs::write(dir.join("interactions.json"), inter).unwrap();
}

/// Small Amazon-layout fixture.
pub fn write_amazon(dir: &Path, users: usize, products: usize, per_user: usize) {
    std::fs::create_dir_all(dir).unwrap();
    let mut meta = String::new();
    for p in 0..products {
        let _ = writeln!(
            meta,
            "{{\"asin\": \"B{p:05}\", \"title\": \"Product {p}\", \"categories\": [[\"Beauty\", \"Aisle {}\", \"Leaf {}\"]]}}",
            p % 5,
            p % 9
        );
    }
    std::fs::write(dir.join("meta.json"), meta).unwrap();
    let mut reviews = String::new();
    let mut ts = 1_300_000_000;
    for u in 0..users {
        for j in 0..per_user {
            let p = (u * 11 + j * 23) % products;
            let rating = 1 + (u * 3 + j) % 5;
            ts += 11;
            let _ = writeln!(
                reviews,
                "{{\"reviewerID\": \"A{u:04}\", \"asin\": \"B{p:05}\", \"overall\": {rating}.0, \"unixReviewTime\": {ts}}}"
            );
        }
    }
    std::fs::write(dir.join("reviews.json"), reviews).unwrap();
}

/// Run the `seren` binary with args in `cwd`; returns (exit code, stdout).
pub fn run_seren(cwd: &Path, args: &[&str]) -> (i32, String) {
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_seren"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    let code = output.status.code().unwrap_or(-1);
    (code, String::from_utf8_lossy(&output.stdout).into_owned())
}

/// All files under a root as (relative path, bytes), sorted.
pub fn snapshot_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out
}
