//! Matrix-factorization models: BPR pairwise ranking and the
//! rating-prediction factorization behind the unexpectedness-weighted
//! recommender, plus the text checkpoint format.
//!
//! Training is single-threaded and seeded, so a fixed seed reproduces the
//! parameters bit for bit.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{positives_by_user, RecsysError, Scorer};
use crate::corpus::{Catalog, Interaction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfHyperParams {
    pub dim: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub epochs: usize,
}

impl Default for MfHyperParams {
    fn default() -> Self {
        Self {
            dim: 32,
            learning_rate: 0.05,
            regularization: 0.01,
            epochs: 30,
        }
    }
}

/// Dense factor model over the training users and the full catalog items.
/// Users absent from training score through the item bias alone.
#[derive(Debug, Clone)]
pub struct MfModel {
    pub params: MfHyperParams,
    pub seed: u64,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
    item_bias: Vec<f64>,
}

impl MfModel {
    fn init(
        train: &[Interaction],
        catalog: &Catalog,
        params: MfHyperParams,
        seed: u64,
    ) -> Result<Self, RecsysError> {
        if train.is_empty() {
            return Err(RecsysError::EmptyTrainingSet);
        }
        if params.dim == 0 {
            return Err(RecsysError::BadDimension);
        }
        let user_ids: Vec<String> = train
            .iter()
            .map(|i| i.user_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let item_ids: Vec<String> = catalog.item_ids().map(str::to_string).collect();
        let user_index: HashMap<String, usize> =
            user_ids.iter().enumerate().map(|(i, u)| (u.clone(), i)).collect();
        let item_index: HashMap<String, usize> =
            item_ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();

        // Small symmetric init keeps early scores near zero.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = params.dim;
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.gen_range(-0.01..0.01)).collect()
        };
        let user_factors = draw(user_ids.len() * d);
        let item_factors = draw(item_ids.len() * d);
        let item_bias = vec![0.0; item_ids.len()];
        Ok(Self {
            params,
            seed,
            user_ids,
            item_ids,
            user_index,
            item_index,
            user_factors,
            item_factors,
            item_bias,
        })
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn knows_user(&self, user_id: &str) -> bool {
        self.user_index.contains_key(user_id)
    }

    fn dot(&self, u: usize, i: usize) -> f64 {
        let d = self.params.dim;
        let uf = &self.user_factors[u * d..(u + 1) * d];
        let vf = &self.item_factors[i * d..(i + 1) * d];
        uf.iter().zip(vf).map(|(a, b)| a * b).sum()
    }

    fn score_idx(&self, u: Option<usize>, i: usize) -> f64 {
        match u {
            Some(u) => self.dot(u, i) + self.item_bias[i],
            None => self.item_bias[i],
        }
    }

    fn all_finite(&self) -> bool {
        self.user_factors.iter().all(|v| v.is_finite())
            && self.item_factors.iter().all(|v| v.is_finite())
            && self.item_bias.iter().all(|v| v.is_finite())
    }
}

impl Scorer for MfModel {
    fn score(&self, user_id: &str, item_id: &str) -> f64 {
        let Some(&i) = self.item_index.get(item_id) else {
            return f64::MIN;
        };
        self.score_idx(self.user_index.get(user_id).copied(), i)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// BPR: stochastic updates on (user, positive, sampled negative) triples
/// maximizing the sigmoid of the score difference, with L2 regularization.
pub fn train_bprmf(
    train: &[Interaction],
    catalog: &Catalog,
    params: MfHyperParams,
    seed: u64,
) -> Result<MfModel, RecsysError> {
    let mut model = MfModel::init(train, catalog, params, seed)?;
    let d = params.dim;
    let lr = params.learning_rate;
    let reg = params.regularization;

    let pairs: Vec<(usize, usize)> = train
        .iter()
        .filter_map(|inter| {
            let u = *model.user_index.get(&inter.user_id)?;
            let i = *model.item_index.get(&inter.item_id)?;
            Some((u, i))
        })
        .collect();
    let mut positives: Vec<HashSet<usize>> = vec![HashSet::new(); model.user_ids.len()];
    for &(u, i) in &pairs {
        positives[u].insert(i);
    }

    let n_items = model.item_ids.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..pairs.len()).collect();

    for epoch in 0..params.epochs {
        // Fisher-Yates shuffle of the update order.
        for idx in (1..order.len()).rev() {
            let j = rng.gen_range(0..=idx);
            order.swap(idx, j);
        }
        for &p in &order {
            let (u, i) = pairs[p];
            // Uniform negative, resampled away from the user's positives.
            let mut j = rng.gen_range(0..n_items);
            let mut tries = 0;
            while positives[u].contains(&j) {
                j = rng.gen_range(0..n_items);
                tries += 1;
                if tries > 100 {
                    break;
                }
            }
            if positives[u].contains(&j) {
                continue; // user consumed essentially the whole catalog
            }

            let x = model.dot(u, i) + model.item_bias[i] - model.dot(u, j) - model.item_bias[j];
            let deriv = sigmoid(-x);

            for f in 0..d {
                let w_u = model.user_factors[u * d + f];
                let w_i = model.item_factors[i * d + f];
                let w_j = model.item_factors[j * d + f];
                model.user_factors[u * d + f] += lr * (deriv * (w_i - w_j) - reg * w_u);
                model.item_factors[i * d + f] += lr * (deriv * w_u - reg * w_i);
                model.item_factors[j * d + f] += lr * (-deriv * w_u - reg * w_j);
            }
            model.item_bias[i] += lr * (deriv - reg * model.item_bias[i]);
            model.item_bias[j] += lr * (-deriv - reg * model.item_bias[j]);
        }
        if !model.all_finite() {
            return Err(RecsysError::Diverged(epoch));
        }
    }
    Ok(model)
}

/// Rating-prediction factorization (biased MF, squared-error loss) used by
/// the unexpectedness-weighted recommender.
pub fn train_uaum(
    train: &[Interaction],
    catalog: &Catalog,
    params: MfHyperParams,
    seed: u64,
) -> Result<MfModel, RecsysError> {
    let mut model = MfModel::init(train, catalog, params, seed)?;
    let d = params.dim;
    let lr = params.learning_rate;
    let reg = params.regularization;

    let triples: Vec<(usize, usize, f64)> = train
        .iter()
        .filter_map(|inter| {
            let u = *model.user_index.get(&inter.user_id)?;
            let i = *model.item_index.get(&inter.item_id)?;
            Some((u, i, inter.rating as f64))
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..triples.len()).collect();
    for epoch in 0..params.epochs {
        for idx in (1..order.len()).rev() {
            let j = rng.gen_range(0..=idx);
            order.swap(idx, j);
        }
        for &p in &order {
            let (u, i, rating) = triples[p];
            let err = model.score_idx(Some(u), i) - rating;
            for f in 0..d {
                let w_u = model.user_factors[u * d + f];
                let w_i = model.item_factors[i * d + f];
                model.user_factors[u * d + f] -= lr * (err * w_i + reg * w_u);
                model.item_factors[i * d + f] -= lr * (err * w_u + reg * w_i);
            }
            model.item_bias[i] -= lr * (err + reg * model.item_bias[i]);
        }
        if !model.all_finite() {
            return Err(RecsysError::Diverged(epoch));
        }
    }
    Ok(model)
}

// ── Category overlap / unexpectedness ───────────────────────────────────────

/// Item categories as bitmasks for fast Jaccard overlap.
pub struct CategoryIndex {
    bits: HashMap<String, Vec<u64>>,
    blocks: usize,
}

impl CategoryIndex {
    pub fn build(catalog: &Catalog) -> Self {
        let mut category_bit: HashMap<&str, usize> = HashMap::new();
        for item in catalog.iter() {
            for cat in &item.categories {
                let next = category_bit.len();
                category_bit.entry(cat.as_str()).or_insert(next);
            }
        }
        let blocks = category_bit.len().div_ceil(64);
        let mut bits = HashMap::new();
        for item in catalog.iter() {
            let mut mask = vec![0u64; blocks];
            for cat in &item.categories {
                let bit = category_bit[cat.as_str()];
                mask[bit / 64] |= 1 << (bit % 64);
            }
            bits.insert(item.item_id.clone(), mask);
        }
        Self { bits, blocks }
    }

    /// Jaccard overlap of two items' category sets. Both empty counts as
    /// identical (1.0); exactly one empty as fully disjoint (0.0).
    pub fn jaccard(&self, a: &str, b: &str) -> f64 {
        let zero = vec![0u64; self.blocks];
        let ma = self.bits.get(a).unwrap_or(&zero);
        let mb = self.bits.get(b).unwrap_or(&zero);
        let mut inter = 0u32;
        let mut union = 0u32;
        for (x, y) in ma.iter().zip(mb) {
            inter += (x & y).count_ones();
            union += (x | y).count_ones();
        }
        if union == 0 {
            let a_empty = ma.iter().all(|&x| x == 0);
            let b_empty = mb.iter().all(|&x| x == 0);
            return if a_empty && b_empty { 1.0 } else { 0.0 };
        }
        inter as f64 / union as f64
    }

    /// 1 − max category overlap between the candidate and any history item.
    pub fn unexpectedness(&self, history: &[String], candidate: &str) -> f64 {
        let max_overlap = history
            .iter()
            .map(|h| self.jaccard(h, candidate))
            .fold(0.0f64, f64::max);
        1.0 - max_overlap
    }
}

/// Scorer for the unexpectedness-weighted recommender:
/// `utility = r̂_norm · (1 + λ · unexpectedness)` with the predicted rating
/// mapped from the 1..5 scale onto [0, 1].
pub struct UaumScorer<'a> {
    pub model: &'a MfModel,
    pub categories: &'a CategoryIndex,
    pub lambda: f64,
    history_by_user: HashMap<String, Vec<String>>,
}

impl<'a> UaumScorer<'a> {
    pub fn new(
        model: &'a MfModel,
        categories: &'a CategoryIndex,
        train: &[Interaction],
        lambda: f64,
    ) -> Self {
        let history_by_user = positives_by_user(train)
            .into_iter()
            .map(|(user, items)| {
                let mut sorted: Vec<String> = items.into_iter().collect();
                sorted.sort();
                (user, sorted)
            })
            .collect();
        Self {
            model,
            categories,
            lambda,
            history_by_user,
        }
    }

    fn rating_norm(&self, user_id: &str, item_id: &str) -> f64 {
        let predicted = self.model.score(user_id, item_id);
        ((predicted - 1.0) / 4.0).clamp(0.0, 1.0)
    }
}

impl Scorer for UaumScorer<'_> {
    fn score(&self, user_id: &str, item_id: &str) -> f64 {
        let unexpectedness = self
            .history_by_user
            .get(user_id)
            .map(|history| self.categories.unexpectedness(history, item_id))
            .unwrap_or(1.0);
        self.rating_norm(user_id, item_id) * (1.0 + self.lambda * unexpectedness)
    }
}

// ── Text checkpoints ────────────────────────────────────────────────────────

/// Save a model as a flat text checkpoint: a header line with the core
/// hyperparameters, then one line per user and item.
pub fn save_model(path: &Path, model: &MfModel, kind: &str) -> Result<(), RecsysError> {
    let io_err = |source| RecsysError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = Vec::new();
    writeln!(
        out,
        "seren-mf v1 kind={} d={} users={} items={} seed={} lr={} reg={} epochs={}",
        kind,
        model.params.dim,
        model.user_ids.len(),
        model.item_ids.len(),
        model.seed,
        model.params.learning_rate,
        model.params.regularization,
        model.params.epochs
    )
    .expect("in-memory write");
    let d = model.params.dim;
    for (u, user) in model.user_ids.iter().enumerate() {
        let factors: Vec<String> = model.user_factors[u * d..(u + 1) * d]
            .iter()
            .map(|v| v.to_string())
            .collect();
        writeln!(out, "U\t{}\t{}", user, factors.join(" ")).expect("in-memory write");
    }
    for (i, item) in model.item_ids.iter().enumerate() {
        let factors: Vec<String> = model.item_factors[i * d..(i + 1) * d]
            .iter()
            .map(|v| v.to_string())
            .collect();
        writeln!(out, "I\t{}\t{}\t{}", item, model.item_bias[i], factors.join(" "))
            .expect("in-memory write");
    }
    std::fs::write(path, out).map_err(io_err)
}

/// Load a text checkpoint; returns the model and its kind label.
pub fn load_model(path: &Path) -> Result<(MfModel, String), RecsysError> {
    let io_err = |reason: String| RecsysError::Io {
        path: path.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, reason),
    };
    let body = std::fs::read_to_string(path).map_err(|source| RecsysError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines = body.lines();
    let header = lines.next().ok_or_else(|| io_err("empty checkpoint".into()))?;
    let mut fields: HashMap<&str, &str> = HashMap::new();
    for token in header.split_whitespace().skip(2) {
        if let Some((k, v)) = token.split_once('=') {
            fields.insert(k, v);
        }
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| io_err(format!("missing {k}")));
    let kind = header
        .split_whitespace()
        .find_map(|t| t.strip_prefix("kind="))
        .ok_or_else(|| io_err("missing kind".into()))?
        .to_string();
    let d: usize = get("d")?.parse().map_err(|_| io_err("bad d".into()))?;
    let seed: u64 = get("seed")?.parse().map_err(|_| io_err("bad seed".into()))?;
    let params = MfHyperParams {
        dim: d,
        learning_rate: get("lr")?.parse().map_err(|_| io_err("bad lr".into()))?,
        regularization: get("reg")?.parse().map_err(|_| io_err("bad reg".into()))?,
        epochs: get("epochs")?.parse().map_err(|_| io_err("bad epochs".into()))?,
    };

    let mut user_ids = Vec::new();
    let mut item_ids = Vec::new();
    let mut user_factors = Vec::new();
    let mut item_factors = Vec::new();
    let mut item_bias = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        let parse_factors = |s: &str| -> Result<Vec<f64>, RecsysError> {
            let values: Result<Vec<f64>, _> = s.split(' ').map(str::parse).collect();
            values.map_err(|_| io_err(format!("bad factors on line {}", n + 2)))
        };
        match parts.as_slice() {
            ["U", user, factors] => {
                let values = parse_factors(factors)?;
                if values.len() != d {
                    return Err(io_err(format!("user factor arity on line {}", n + 2)));
                }
                user_ids.push(user.to_string());
                user_factors.extend(values);
            }
            ["I", item, bias, factors] => {
                let values = parse_factors(factors)?;
                if values.len() != d {
                    return Err(io_err(format!("item factor arity on line {}", n + 2)));
                }
                item_ids.push(item.to_string());
                item_bias.push(bias.parse().map_err(|_| io_err("bad bias".into()))?);
                item_factors.extend(values);
            }
            _ => return Err(io_err(format!("unrecognized line {}", n + 2))),
        }
    }
    let user_index = user_ids.iter().enumerate().map(|(i, u)| (u.clone(), i)).collect();
    let item_index = item_ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
    Ok((
        MfModel {
            params,
            seed,
            user_ids,
            item_ids,
            user_index,
            item_index,
            user_factors,
            item_factors,
            item_bias,
        },
        kind,
    ))
}
