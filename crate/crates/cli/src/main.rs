//! `seren` — batch pipeline driver: ingest → split → recommend → judge →
//! evaluate, plus the prompt-calibration runner.

mod commands;
mod config;
mod error;
mod lock;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::{CliError, ExitKind};

#[derive(Parser, Debug)]
#[command(
    name = "seren",
    version,
    about = "Offline serendipity evaluation for recommender systems with LLM judges"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Declarative TOML config; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Dataset directory.
    #[arg(long, global = true)]
    dataset: Option<String>,

    /// Dataset format: ml1m | goodreads | amazon_beauty | serendipity2018.
    #[arg(long, global = true)]
    format: Option<String>,

    /// Fold indices to process (repeatable; default 0 1 2).
    #[arg(long, global = true)]
    fold: Vec<usize>,

    /// Prompt kind: base | ls | cot | ltm.
    #[arg(long, global = true)]
    prompt: Option<String>,

    /// Judge backend: http | mock-table | mock-const | mock-hash.
    #[arg(long, global = true)]
    backend: Option<String>,

    /// For `recommend`: the recommender (bprmf | kfn | uaum | popularity).
    /// For `judge`/`calibrate`: the LLM model name sent to the backend.
    #[arg(long, global = true)]
    model: Option<String>,

    /// List length / metric cutoff.
    #[arg(long, global = true)]
    k: Option<usize>,

    /// Master seed; all randomness derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (shared across pipeline stages).
    #[arg(long, global = true)]
    out: Option<String>,

    /// Verdict cache path.
    #[arg(long, global = true)]
    cache: Option<String>,

    /// External rec-lists to install, as name:fold:path (repeatable).
    #[arg(long = "import", global = true)]
    imports: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Load a raw dataset into the normalized catalog + interaction log.
    Ingest,
    /// Convert to implicit feedback and write the temporal fold manifests.
    Split,
    /// Train/tune recommenders (or import lists) and emit rec-list files.
    Recommend,
    /// Score recommended items with the judge backend, filling the cache.
    Judge,
    /// Compute the model-comparison report from folds, lists and verdicts.
    Evaluate,
    /// Run the prompt-selection calibration against derived ground truth.
    Calibrate,
}

fn apply_overrides(cfg: &mut RunConfig, cli: &Cli) {
    if let Some(v) = &cli.dataset {
        cfg.dataset.path = v.clone();
    }
    if let Some(v) = &cli.format {
        cfg.dataset.format = v.clone();
    }
    if !cli.fold.is_empty() {
        cfg.split.folds = cli.fold.clone();
    }
    if let Some(v) = &cli.prompt {
        cfg.judge.prompt = v.clone();
        cfg.judge.calibrate_prompts = vec![v.clone()];
    }
    if let Some(v) = &cli.backend {
        cfg.backend.kind = v.clone();
    }
    if let Some(v) = &cli.model {
        match cli.command {
            Command::Recommend => cfg.recommend.models = vec![v.clone()],
            _ => cfg.backend.model = v.clone(),
        }
    }
    if let Some(v) = cli.k {
        cfg.recommend.k = v;
        cfg.eval.k = v;
    }
    if let Some(v) = cli.seed {
        cfg.run.seed = v;
    }
    if let Some(v) = &cli.out {
        cfg.run.out = v.clone();
    }
    if let Some(v) = &cli.cache {
        cfg.run.cache = v.clone();
    }
    if !cli.imports.is_empty() {
        cfg.recommend.imports = cli.imports.clone();
    }
}

fn validate(cfg: &RunConfig, command: Command) -> Result<(), CliError> {
    let usage = |m: String| CliError::usage(m);
    cfg.judge
        .prompt
        .parse::<seren_core::judge::PromptKind>()
        .map_err(usage)?;
    for p in &cfg.judge.calibrate_prompts {
        p.parse::<seren_core::judge::PromptKind>().map_err(usage)?;
    }
    cfg.eval
        .population
        .parse::<seren_core::evaluate::Population>()
        .map_err(usage)?;
    if !["http", "mock-table", "mock-const", "mock-hash"].contains(&cfg.backend.kind.as_str()) {
        return Err(usage(format!("unknown backend kind: {}", cfg.backend.kind)));
    }
    if cfg.backend.temperature.is_nan() || cfg.backend.temperature < 0.0 {
        return Err(usage("backend.temperature must be at least 0".into()));
    }
    if cfg.backend.kind == "http" && cfg.backend.endpoint.is_empty() {
        return Err(usage("http backend requires backend.endpoint".into()));
    }
    if cfg.backend.kind == "mock-table" && cfg.backend.table_path.is_empty() {
        return Err(usage("mock-table backend requires backend.table_path".into()));
    }
    if cfg.split.folds.iter().any(|&f| f >= seren_core::split::FOLD_COUNT) {
        return Err(usage(format!(
            "fold indices must be < {}",
            seren_core::split::FOLD_COUNT
        )));
    }
    if cfg.split.negative_ratio.is_nan() || cfg.split.negative_ratio <= 0.0 {
        return Err(usage("split.negative_ratio must be positive".into()));
    }
    if cfg.recommend.k == 0 || cfg.eval.k == 0 || cfg.eval.recall_k == 0 {
        return Err(usage("k values must be at least 1".into()));
    }
    if !(1..=5).contains(&cfg.eval.ser_threshold) {
        return Err(usage("eval.ser_threshold must be in 1..=5".into()));
    }
    for model in &cfg.recommend.models {
        model
            .parse::<seren_core::recsys::ModelKind>()
            .map_err(usage)?;
    }
    if matches!(command, Command::Ingest | Command::Calibrate) && cfg.dataset.path.is_empty() {
        return Err(usage("dataset.path is required".into()));
    }
    if matches!(command, Command::Ingest | Command::Calibrate) {
        cfg.dataset
            .format
            .parse::<seren_core::corpus::DatasetFormat>()
            .map_err(usage)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(CliError::usage)?,
        None => RunConfig::default(),
    };
    apply_overrides(&mut cfg, cli);
    validate(&cfg, cli.command)?;

    let _lock = lock::OutputLock::acquire(&cfg.out_dir()).map_err(CliError::usage)?;
    cfg.write_snapshot(&cfg.out_dir())
        .map_err(|e| CliError::data(format!("cannot write config snapshot: {e}")))?;

    match cli.command {
        Command::Ingest => commands::ingest::run(&cfg),
        Command::Split => commands::split::run(&cfg),
        Command::Recommend => commands::recommend::run(&cfg),
        Command::Judge => commands::judge::run(&cfg),
        Command::Evaluate => commands::evaluate::run(&cfg),
        Command::Calibrate => commands::calibrate::run(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are not usage errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => ExitKind::Usage as u8,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.kind as u8)
        }
    }
}
