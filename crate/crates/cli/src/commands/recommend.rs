//! `seren recommend`: train/tune the built-in baselines (or install
//! external lists) and write one rec-list file per model per fold.

use std::collections::HashSet;
use std::path::Path;

use seren_core::recsys::{
    read_reclist_file, recommend_kfn, recommend_popularity, recommend_topk, save_model,
    train_bprmf, train_uaum, tune, write_reclist_file, CategoryIndex, MfHyperParams, ModelKind,
    RecList, SearchSpace, TrialParams, UaumScorer,
};
use seren_core::split::derive_seed;

use super::{load_fold, load_normalized, reclist_path, FoldFiles};
use crate::config::RunConfig;
use crate::error::CliError;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.out_dir();
    let (catalog, _) = load_normalized(&out)?;

    install_imports(cfg)?;

    for model_name in &cfg.recommend.models {
        let kind: ModelKind = model_name.parse().map_err(CliError::usage)?;
        for &fold in &cfg.split.folds {
            let files = load_fold(&out, fold)?;
            let lists = recommend_for_fold(cfg, kind, &files, &catalog, fold)?;
            let path = reclist_path(&out, kind.label(), fold);
            std::fs::create_dir_all(path.parent().expect("reclist path has parent"))?;
            write_reclist_file(&path, &lists)?;
            let short = lists.iter().filter(|l| l.items.len() < cfg.recommend.k).count();
            if short > 0 {
                eprintln!(
                    "warning: {short} users received fewer than {} items ({} fold {fold})",
                    cfg.recommend.k,
                    kind.label()
                );
            }
            println!("{} fold {fold}: {} lists written", kind.label(), lists.len());
        }
    }
    Ok(())
}

fn recommend_for_fold(
    cfg: &RunConfig,
    kind: ModelKind,
    files: &FoldFiles,
    catalog: &seren_core::corpus::Catalog,
    fold: usize,
) -> Result<Vec<RecList>, CliError> {
    let out = cfg.out_dir();
    let k = cfg.recommend.k;
    let fixed = &cfg.recommend.fixed;
    let mut params = TrialParams {
        mf: MfHyperParams {
            dim: fixed.dim,
            learning_rate: fixed.learning_rate,
            regularization: fixed.regularization,
            epochs: fixed.epochs,
        },
        lambda: fixed.lambda,
        k_neighbors: fixed.k_neighbors,
    };
    let mut model_seed = derive_seed(cfg.run.seed, &format!("{}-fold{fold}", kind.label()));

    if cfg.recommend.tune_trials > 0 {
        let outcome = tune(
            kind,
            &files.train,
            &files.validation,
            catalog,
            &SearchSpace::default(),
            cfg.recommend.tune_trials,
            derive_seed(cfg.run.seed, &format!("tune-{}-fold{fold}", kind.label())),
            cfg.eval.recall_k,
        )?;
        let trace_path = out.join("reclists").join(kind.label());
        std::fs::create_dir_all(&trace_path)?;
        std::fs::write(
            trace_path.join(format!("tune_fold_{fold}.tsv")),
            outcome.trace_tsv(),
        )?;
        params = outcome.best().params;
        model_seed = outcome.best().seed;
        println!(
            "{} fold {fold}: tuned over {} trials, best recall@{} = {:.4}",
            kind.label(),
            outcome.trace.len(),
            cfg.eval.recall_k,
            outcome.best().objective.unwrap_or(0.0)
        );
    }

    let train_positives = seren_core::recsys::positives_by_user(&files.train);
    let items: Vec<String> = catalog.item_ids().map(str::to_string).collect();
    let users: Vec<&String> = train_positives.keys().collect();

    let mut lists = Vec::with_capacity(users.len());
    match kind {
        ModelKind::Bprmf => {
            let model = train_bprmf(&files.train, catalog, params.mf, model_seed)?;
            maybe_checkpoint(cfg, &model, "bprmf", fold)?;
            for user in users {
                lists.push(recommend_topk(&model, &items, user, k, &train_positives[user])?);
            }
        }
        ModelKind::Uaum => {
            let model = train_uaum(&files.train, catalog, params.mf, model_seed)?;
            maybe_checkpoint(cfg, &model, "uaum", fold)?;
            let index = CategoryIndex::build(catalog);
            let scorer = UaumScorer::new(&model, &index, &files.train, params.lambda);
            for user in users {
                lists.push(recommend_topk(&scorer, &items, user, k, &train_positives[user])?);
            }
        }
        ModelKind::Kfn => {
            for user in users {
                lists.push(recommend_kfn(&files.train, catalog, user, k, params.k_neighbors)?);
            }
        }
        ModelKind::Popularity => {
            for user in users {
                lists.push(recommend_popularity(&files.train, catalog, user, k)?);
            }
        }
    }
    Ok(lists)
}

fn maybe_checkpoint(
    cfg: &RunConfig,
    model: &seren_core::recsys::MfModel,
    kind: &str,
    fold: usize,
) -> Result<(), CliError> {
    if cfg.recommend.save_checkpoints {
        let dir = cfg.out_dir().join("reclists").join(kind);
        std::fs::create_dir_all(&dir)?;
        save_model(&dir.join(format!("model_fold_{fold}.txt")), model, kind)?;
    }
    Ok(())
}

/// Install external lists (`name:fold:path`), validating the interchange
/// format and the no-training-positives invariant before copying.
fn install_imports(cfg: &RunConfig) -> Result<(), CliError> {
    let out = cfg.out_dir();
    for spec in &cfg.recommend.imports {
        let parts: Vec<&str> = spec.splitn(3, ':').collect();
        let [name, fold_str, path] = parts.as_slice() else {
            return Err(CliError::usage(format!(
                "bad import spec {spec:?}, expected name:fold:path"
            )));
        };
        let fold: usize = fold_str
            .parse()
            .map_err(|_| CliError::usage(format!("bad fold in import spec {spec:?}")))?;
        let (lists, warnings) = read_reclist_file(Path::new(path))?;
        for warning in &warnings {
            eprintln!("warning: {name}: {warning}");
        }
        let files = load_fold(&out, fold)?;
        let positives = seren_core::recsys::positives_by_user(&files.train);
        let empty = HashSet::new();
        for list in &lists {
            list.validate(positives.get(&list.user_id).unwrap_or(&empty))?;
        }
        let dest = reclist_path(&out, name, fold);
        std::fs::create_dir_all(dest.parent().expect("reclist path has parent"))?;
        write_reclist_file(&dest, &lists)?;
        println!("imported {name} fold {fold}: {} lists", lists.len());
    }
    Ok(())
}
