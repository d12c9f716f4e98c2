//! `seren calibrate`: derive the five-level ground truth from the answers
//! file and score judge predictions per prompt kind (MAE, three-class
//! accuracy, confusion matrices).

use std::collections::HashSet;
use std::fmt::Write as _;

use seren_core::calibrate::{derive_labels, label_distribution, run_prompt_selection, RoundingRule};
use seren_core::corpus::{load_answers, load_dataset, DatasetFormat};
use seren_core::judge::{PromptKind, VerdictCache};
use seren_core::split::to_implicit;

use super::{build_backend, build_judge};
use crate::config::RunConfig;
use crate::error::CliError;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let format: DatasetFormat = cfg.dataset.format.parse().map_err(CliError::usage)?;
    if format != DatasetFormat::Serendipity2018 {
        return Err(CliError::usage(
            "calibrate requires --format serendipity2018 (the dataset with labeled ground truth)",
        ));
    }
    let out = cfg.out_dir();
    let dataset_dir = std::path::Path::new(&cfg.dataset.path);
    let loaded = load_dataset(dataset_dir, format)?;
    let question_columns = (!cfg.judge.question_columns.is_empty())
        .then(|| cfg.judge.question_columns.clone());
    let answers = load_answers(dataset_dir, question_columns.as_deref())?;

    let rounding = RoundingRule::HalfUp;
    let (labels, excluded) = derive_labels(&answers, rounding);
    if labels.is_empty() {
        return Err(CliError::data("no labels derivable from answers file"));
    }
    let distribution = label_distribution(&labels);

    let kinds: Vec<PromptKind> = cfg
        .judge
        .calibrate_prompts
        .iter()
        .map(|p| p.parse().map_err(CliError::usage))
        .collect::<Result<_, _>>()?;

    let backend = build_backend(cfg)?;
    let cache = VerdictCache::open(&cfg.cache_path())?;
    let judge = build_judge(cfg, backend.as_ref(), &cache)?;
    let exclude_users: HashSet<String> = if cfg.judge.exclude_bank_users {
        judge.bank().source_user_ids.iter().cloned().collect()
    } else {
        HashSet::new()
    };

    let history_log = to_implicit(&loaded.interactions, cfg.split.threshold);
    let report = run_prompt_selection(
        &labels,
        &kinds,
        &judge,
        &loaded.catalog,
        &history_log,
        cfg.judge.history_len,
        &exclude_users,
        rounding,
    )?;

    std::fs::write(out.join("calibration.tsv"), report.to_tsv())?;
    report.write_confusion_csvs(&out)?;

    let mut summary = String::new();
    writeln!(summary, "labels\t{}", report.total_labels).expect("string write");
    writeln!(summary, "excluded_missing_answers\t{excluded}").expect("string write");
    writeln!(
        summary,
        "label_distribution\t1:{} 2:{} 3:{} 4:{} 5:{}",
        distribution[0], distribution[1], distribution[2], distribution[3], distribution[4]
    )
    .expect("string write");
    writeln!(summary, "rounding_rule\t{}", report.rounding.label()).expect("string write");
    writeln!(summary, "skipped_no_history\t{}", report.skipped_no_history).expect("string write");
    writeln!(summary, "skipped_unknown_item\t{}", report.skipped_unknown_item).expect("string write");
    writeln!(summary, "excluded_bank_users\t{}", report.excluded_bank_users).expect("string write");
    std::fs::write(out.join("calibration_report.txt"), summary)?;

    println!("{:<6} {:>8} {:>10} {:>8}", "prompt", "MAE", "accuracy", "judged");
    for row in &report.rows {
        println!(
            "{:<6} {:>8.4} {:>9.2}% {:>8}",
            row.kind.label(),
            row.mae,
            row.accuracy_pct,
            row.judged
        );
    }
    Ok(())
}
