//! `seren evaluate`: fold metrics from rec lists, held-out positives, and
//! cached verdicts; emits the model-comparison table and the per-fold
//! breakdown.

use std::collections::HashMap;

use seren_core::evaluate::{
    evaluate_fold, render_per_fold_tsv, render_report_tsv, report_for_model, EvalOptions,
    FoldOutcome, Population,
};
use seren_core::judge::{JudgeRequest, PromptKind, VerdictCache};
use seren_core::recsys::read_reclist_file;

use super::{build_backend, build_judge, histories_for_users, load_fold, load_normalized, reclist_models, reclist_path};
use crate::config::RunConfig;
use crate::error::CliError;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.out_dir();
    let (catalog, _) = load_normalized(&out)?;
    let kind: PromptKind = cfg.judge.prompt.parse().map_err(CliError::usage)?;
    let population: Population = cfg.eval.population.parse().map_err(CliError::usage)?;
    let options = EvalOptions {
        k: cfg.eval.k,
        ser_threshold: cfg.eval.ser_threshold,
        population,
    };

    // The backend is never called here; verdicts come from the cache only.
    let backend = build_backend(cfg)?;
    let cache = VerdictCache::open(&cfg.cache_path())?;
    let judge = build_judge(cfg, backend.as_ref(), &cache)?;

    let mut tables: Vec<(seren_core::metrics::EvaluationReport, Vec<FoldOutcome>)> = Vec::new();
    for model in reclist_models(&out)? {
        let mut folds: Vec<FoldOutcome> = Vec::new();
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

            // (user, item) → serendipity, from the cache via the exact
            // prompt the judge stage rendered. Missing or failed → None.
            let mut scores: HashMap<(String, String), Option<u8>> = HashMap::new();
            for list in &lists {
                let Some(history) = histories.get(&list.user_id) else {
                    continue;
                };
                for item_id in list.item_ids() {
                    let Some(record) = catalog.get(item_id) else {
                        continue;
                    };
                    let request = JudgeRequest::new(
                        list.user_id.clone(),
                        history.clone(),
                        record.clone(),
                        kind,
                    )?;
                    let verdict = judge.cached(&request)?;
                    scores.insert(
                        (list.user_id.clone(), item_id.to_string()),
                        verdict.map(|v| v.serendipity),
                    );
                }
            }
            let judged = |user: &str, item: &str| -> Option<u8> {
                scores
                    .get(&(user.to_string(), item.to_string()))
                    .copied()
                    .flatten()
            };
            folds.push(evaluate_fold(
                fold,
                &files.train,
                &files.test,
                &lists,
                &judged,
                &options,
            )?);
        }
        if folds.iter().all(|f| f.metrics.users.is_empty()) {
            eprintln!("warning: no evaluable users for {model}; skipped");
            continue;
        }
        let report = report_for_model(&model, cfg.eval.k, &folds)?;
        tables.push((report, folds));
    }

    let reports: Vec<seren_core::metrics::EvaluationReport> =
        tables.iter().map(|(r, _)| r.clone()).collect();
    let tsv = render_report_tsv(&reports);
    std::fs::write(out.join("evaluation.tsv"), &tsv)?;
    std::fs::write(out.join("evaluation_folds.tsv"), render_per_fold_tsv(&tables))?;

    // Aligned stdout rendering of the same table.
    println!("{:<12} {:>8} {:>8} {:>8} {:>8} {:>8}", "model", "P_acc", "N_acc", "P_ser", "N_ser", "Avg");
    for r in &reports {
        println!(
            "{:<12} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
            r.model,
            r.precision_acc_pct.overall,
            r.ndcg_acc_pct.overall,
            r.precision_ser_pct.overall,
            r.ndcg_ser_pct.overall,
            r.avg_score.overall
        );
    }
    Ok(())
}
