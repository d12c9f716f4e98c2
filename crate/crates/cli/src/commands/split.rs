//! `seren split`: implicit conversion + temporal fold manifests + sampled
//! negatives.

use std::io::Write;

use seren_core::corpus::filter_min_counts;
use seren_core::split::{
    chronological_subsets, derive_seed, sample_negatives, temporal_global_split,
    to_implicit, write_fold_manifest,
};

use super::{fold_dir, load_normalized};
use crate::config::RunConfig;
use crate::error::CliError;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.out_dir();
    let (catalog, interactions) = load_normalized(&out)?;

    let mut implicit = to_implicit(&interactions, cfg.split.threshold);
    if cfg.split.min_user_interactions > 0 || cfg.split.min_item_interactions > 0 {
        implicit = filter_min_counts(
            &implicit,
            cfg.split.min_user_interactions,
            cfg.split.min_item_interactions,
        );
    }
    let (_, boundaries) = chronological_subsets(&implicit)?;

    for &fold in &cfg.split.folds {
        let split = temporal_global_split(&implicit, fold)?;
        let dir = fold_dir(&out, fold);
        write_fold_manifest(&dir, &split, &boundaries, cfg.run.seed)?;

        let negatives = sample_negatives(
            &split.train,
            &catalog,
            cfg.split.negative_ratio,
            derive_seed(cfg.run.seed, &format!("negatives-fold{fold}")),
        )?;
        let mut buf = Vec::new();
        for (user, item) in &negatives {
            writeln!(buf, "{user}\t{item}").expect("in-memory write");
        }
        std::fs::write(dir.join("negatives.tsv"), buf)?;

        println!(
            "fold {fold}: train={} valid={} test={} negatives={}",
            split.train.len(),
            split.validation.len(),
            split.test.len(),
            negatives.len()
        );
    }
    Ok(())
}
