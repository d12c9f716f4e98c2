//! `seren ingest`: raw dataset → normalized catalog + interaction log.

use seren_core::corpus::{dataset_stats, load_dataset, write_normalized, DatasetFormat};

use super::normalized_dir;
use crate::config::RunConfig;
use crate::error::CliError;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let format: DatasetFormat = cfg.dataset.format.parse().map_err(CliError::usage)?;
    let loaded = load_dataset(std::path::Path::new(&cfg.dataset.path), format)?;

    let out = normalized_dir(&cfg.out_dir());
    write_normalized(&out, &loaded.catalog, &loaded.interactions)?;
    std::fs::write(out.join("load_report.txt"), loaded.report.to_string())?;

    let stats = dataset_stats(&loaded.catalog, &loaded.interactions);
    println!(
        "ingested {}: users={} items={} interactions={} categories={} (dropped {} rows)",
        cfg.dataset.path,
        stats.users,
        stats.items,
        stats.interactions,
        stats.categories,
        loaded.report.dropped()
    );
    Ok(())
}
