//! `seren judge`: score every recommended item with the configured
//! backend, filling the verdict cache. Resumable: cached verdicts are
//! never re-queried.

use std::fmt::Write as _;

use seren_core::corpus::ItemRecord;
use seren_core::judge::{PromptKind, VerdictCache};
use seren_core::recsys::read_reclist_file;

use super::{build_backend, build_judge, histories_for_users, load_fold, load_normalized, reclist_models, reclist_path};
use crate::config::RunConfig;
use crate::error::CliError;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.out_dir();
    let (catalog, _) = load_normalized(&out)?;
    let kind: PromptKind = cfg.judge.prompt.parse().map_err(CliError::usage)?;

    let backend = build_backend(cfg)?;
    let cache = VerdictCache::open(&cfg.cache_path())?;
    let judge = build_judge(cfg, backend.as_ref(), &cache)?;

    let mut report = String::new();
    writeln!(report, "model\tfold\tusers\titems\tparse_failures\tbackend_failures\tskipped_users\tunknown_items").expect("string write");
    let mut total_backend_failures = 0usize;
    let mut failed_items: Vec<String> = Vec::new();

    for model in reclist_models(&out)? {
        for &fold in &cfg.split.folds {
            let path = reclist_path(&out, &model, fold);
            if !path.exists() {
                continue;
            }
            let (lists, _) = read_reclist_file(&path)?;
            let files = load_fold(&out, fold)?;
            let histories = histories_for_users(
                lists.iter().map(|l| l.user_id.as_str()),
                &files.train,
                &catalog,
                cfg.judge.history_len,
            );

            let mut users = 0usize;
            let mut items = 0usize;
            let mut parse_failures = 0usize;
            let mut backend_failures = 0usize;
            let mut skipped_users = 0usize;
            let mut unknown_items = 0usize;

            for list in &lists {
                let Some(history) = histories.get(&list.user_id) else {
                    skipped_users += 1;
                    continue;
                };
                let mut candidates: Vec<ItemRecord> = Vec::with_capacity(list.items.len());
                for item_id in list.item_ids() {
                    match catalog.get(item_id) {
                        Some(record) => candidates.push(record.clone()),
                        None => {
                            unknown_items += 1;
                            failed_items.push(format!(
                                "{model}\tfold {fold}\t{}\t{item_id}\tunknown item",
                                list.user_id
                            ));
                        }
                    }
                }
                let outcome = judge.judge_list(&list.user_id, history, &candidates, kind)?;
                users += 1;
                items += outcome.items.len();
                parse_failures += outcome.parse_failures;
                backend_failures += outcome.backend_failures;
                for judged in &outcome.items {
                    if let Err(failure) = &judged.verdict {
                        failed_items.push(format!(
                            "{model}\tfold {fold}\t{}\t{}\t{}",
                            list.user_id, judged.item_id, failure.message
                        ));
                    }
                }
            }
            writeln!(
                report,
                "{model}\t{fold}\t{users}\t{items}\t{parse_failures}\t{backend_failures}\t{skipped_users}\t{unknown_items}"
            )
            .expect("string write");
            total_backend_failures += backend_failures;
            println!(
                "judged {model} fold {fold}: {users} users, {items} items ({parse_failures} parse failures, {backend_failures} backend failures, {skipped_users} users without history)"
            );
        }
    }

    if !failed_items.is_empty() {
        report.push_str("\nfailed items (model, fold, user, item, reason):\n");
        for line in &failed_items {
            report.push('\t');
            report.push_str(line);
            report.push('\n');
        }
    }
    std::fs::write(out.join("judge_report.txt"), report)?;
    println!("cache now holds {} verdicts at {}", cache.len(), cfg.cache_path().display());

    if total_backend_failures > 0 {
        return Err(CliError::backend(format!(
            "{total_backend_failures} items failed at the backend tier; rerun to retry (cached verdicts are kept)"
        )));
    }
    Ok(())
}
