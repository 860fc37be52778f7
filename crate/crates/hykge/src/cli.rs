//! Command-line surface: `train`, `evaluate`, `analyze`, `gradcheck`,
//! and `paramcount`.
//!
//! Train settings resolve in layers: built-in defaults, then a named
//! preset (`--preset`), then a flat `key = value` config file
//! (`--config`), then explicit flags. The dataset directory defaults to
//! `$HYKGE_DATA_DIR` and must contain `train.txt`, `valid.txt`, and
//! `test.txt`.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 consistency error
//! (checkpoint/dataset mismatch), 4 gradient-check failure.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::analysis::{
    classify_complex, classify_multiplicity, classify_patterns, khs_adjacency_per_relation,
    khs_per_relation, relation_frequency, ComplexCategory, PatternThresholds, SplitSelection,
};
use crate::data::{self, DataError, Dataset};
use crate::eval::{self, EvalError, Metrics, RankMode};
use crate::models::{param_count, ModelError, ModelKind, ScoreVariant, ALL_KINDS};
use crate::training::{
    self, all_kind_variants, finite_difference_check, OptimizerKind, TrainConfig, TrainError,
};

const GRADCHECK_TOLERANCE: f64 = 1e-5;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable inputs, malformed files. Exit 2.
    Usage(String),
    /// Checkpoint/dataset disagreement. Exit 3.
    Consistency(String),
    /// Gradient gate exceeded its tolerance. Exit 4.
    Acceptance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Consistency(_) => 3,
            CliError::Acceptance(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Consistency(m) | CliError::Acceptance(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::VocabMismatch { .. } | DataError::CorruptCheckpoint(_) => {
                CliError::Consistency(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "hykge",
    version,
    about = "Knowledge-graph embedding in Euclidean and hyperbolic space"
)]
struct Cli {
    /// Cap on rayon worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model and write checkpoints plus a training log.
    Train(TrainArgs),
    /// Evaluate a checkpoint: global metrics and optional slices.
    Evaluate(EvalArgs),
    /// Dataset analytics: hierarchy, patterns, multiplicity, frequencies.
    Analyze(AnalyzeArgs),
    /// Compare analytic gradients against finite differences.
    Gradcheck(GradcheckArgs),
    /// Parameter-count formula for a model and dataset size.
    Paramcount(ParamcountArgs),
}

#[derive(Args, Debug, Clone)]
struct TrainArgs {
    /// Dataset directory with train.txt/valid.txt/test.txt
    /// (default: $HYKGE_DATA_DIR).
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Named hyperparameter preset, e.g. `wn18rr-32-3hth`.
    #[arg(long)]
    preset: Option<String>,
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model kind: TE, 2E, 3E, TH, 2H, 3H, 2E-TE, 3E-TE, 3H-TH,
    /// 2E-TE-2H-TH, 3E-TE-3H-TH.
    #[arg(long)]
    model: Option<String>,
    /// Scoring variant (defaults to the kind's own).
    #[arg(long)]
    variant: Option<String>,
    /// Embedding dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Optimizer: adam or adagrad.
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Negative samples per positive triple.
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Validation period in epochs.
    #[arg(long)]
    validate_every: Option<usize>,
    /// Validations without improvement before early stop.
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Augment training with reciprocal relations and evaluate both
    /// query directions.
    #[arg(long)]
    reciprocal: bool,
    /// Output directory for checkpoints and the training log.
    #[arg(long, default_value = "hykge-out")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct EvalArgs {
    /// Dataset directory (default: $HYKGE_DATA_DIR).
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Checkpoint manifest path (arrays at `<path>.bin`).
    #[arg(long)]
    checkpoint: PathBuf,
    /// Ranking mode: filtered or raw.
    #[arg(long, default_value = "filtered")]
    mode: String,
    /// Split to evaluate: test, valid, or train.
    #[arg(long, default_value = "test")]
    split: String,
    /// Extra report: per-relation, patterns, or categories (repeatable).
    /// Pattern slices always come from the test split.
    #[arg(long)]
    slice: Vec<String>,
    /// The checkpoint was trained with reciprocal augmentation.
    #[arg(long)]
    reciprocal: bool,
    /// Directory for CSV copies of every printed table.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct AnalyzeArgs {
    /// Dataset directory (default: $HYKGE_DATA_DIR).
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Splits feeding the hierarchy score: all, train, valid, or test.
    #[arg(long, default_value = "all")]
    khs_split: String,
    /// Use the undirected pair definition for multiplicity.
    #[arg(long)]
    undirected: bool,
    /// Directory for CSV reports.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct GradcheckArgs {
    /// Embedding dimension for the randomized instances.
    #[arg(long, default_value_t = 8)]
    dim: usize,
    /// Random draws per kind and variant.
    #[arg(long, default_value_t = 100)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Check a single kind instead of all of them.
    #[arg(long)]
    model: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct ParamcountArgs {
    /// Model kind.
    #[arg(long)]
    model: String,
    /// Named dataset: wn18rr, fb15k237, or fb15k.
    #[arg(long)]
    dataset: Option<String>,
    /// Entity count (overrides --dataset).
    #[arg(long)]
    entities: Option<usize>,
    /// Relation count (overrides --dataset).
    #[arg(long)]
    relations: Option<usize>,
    /// Embedding dimension.
    #[arg(long, default_value_t = 1)]
    dim: usize,
}

// ---------------------------------------------------------------------------
// Presets (best hyperparameters per dataset, dimension, and model)
// ---------------------------------------------------------------------------

struct Preset {
    name: String,
    kind: ModelKind,
    dim: usize,
    lr: f64,
    optimizer: OptimizerKind,
    batch_size: usize,
    negatives: usize,
}

type PresetRow = (&'static str, f64, OptimizerKind, usize, usize);

const WN18RR_32: [PresetRow; 11] = [
    ("TE", 0.001, OptimizerKind::Adam, 500, 50),
    ("2E", 0.1, OptimizerKind::Adagrad, 500, 50),
    ("3E", 0.2, OptimizerKind::Adagrad, 500, 50),
    ("TH", 0.0005, OptimizerKind::Adam, 500, 100),
    ("2H", 0.0005, OptimizerKind::Adam, 500, 50),
    ("3H", 0.001, OptimizerKind::Adam, 500, 100),
    ("2E-TE", 0.1, OptimizerKind::Adagrad, 500, 50),
    ("3E-TE", 0.2, OptimizerKind::Adagrad, 500, 100),
    ("2E-TE-2H-TH", 0.001, OptimizerKind::Adam, 500, 100),
    ("3H-TH", 0.001, OptimizerKind::Adam, 500, 100),
    ("3E-TE-3H-TH", 0.001, OptimizerKind::Adam, 500, 100),
];

const WN18RR_HIGH: [PresetRow; 11] = [
    ("TE", 0.001, OptimizerKind::Adam, 500, 100),
    ("2E", 0.1, OptimizerKind::Adagrad, 500, 100),
    ("3E", 0.2, OptimizerKind::Adagrad, 500, 100),
    ("TH", 0.001, OptimizerKind::Adam, 500, 100),
    ("2H", 0.001, OptimizerKind::Adam, 500, 50),
    ("3H", 0.001, OptimizerKind::Adam, 500, 100),
    ("2E-TE", 0.1, OptimizerKind::Adagrad, 500, 50),
    ("3E-TE", 0.2, OptimizerKind::Adagrad, 500, 100),
    ("2E-TE-2H-TH", 0.001, OptimizerKind::Adam, 500, 100),
    ("3H-TH", 0.001, OptimizerKind::Adam, 500, 100),
    ("3E-TE-3H-TH", 0.001, OptimizerKind::Adam, 500, 100),
];

const FB15K237_32: [PresetRow; 11] = [
    ("TE", 0.05, OptimizerKind::Adam, 1000, 50),
    ("2E", 0.05, OptimizerKind::Adagrad, 1000, 50),
    ("3E", 0.05, OptimizerKind::Adagrad, 1000, 50),
    ("TH", 0.05, OptimizerKind::Adagrad, 1000, 50),
    ("2H", 0.1, OptimizerKind::Adagrad, 1000, 50),
    ("3H", 0.05, OptimizerKind::Adagrad, 1000, 50),
    ("2E-TE", 0.05, OptimizerKind::Adagrad, 1000, 50),
    ("3E-TE", 0.05, OptimizerKind::Adagrad, 1000, 50),
    ("2E-TE-2H-TH", 0.05, OptimizerKind::Adagrad, 1000, 50),
    ("3H-TH", 0.05, OptimizerKind::Adagrad, 1000, 50),
    ("3E-TE-3H-TH", 0.05, OptimizerKind::Adagrad, 1000, 50),
];

const FB15K_32: [PresetRow; 11] = [
    ("TE", 0.05, OptimizerKind::Adagrad, 1000, 200),
    ("2E", 0.4, OptimizerKind::Adagrad, 1000, 200),
    ("3E", 0.2, OptimizerKind::Adagrad, 1000, 200),
    ("TH", 0.1, OptimizerKind::Adagrad, 1000, 200),
    ("2H", 0.1, OptimizerKind::Adagrad, 1000, 200),
    ("3H", 0.2, OptimizerKind::Adagrad, 1000, 200),
    ("2E-TE", 0.4, OptimizerKind::Adagrad, 1000, 200),
    ("3E-TE", 0.2, OptimizerKind::Adagrad, 1000, 200),
    ("2E-TE-2H-TH", 0.2, OptimizerKind::Adagrad, 1000, 200),
    ("3H-TH", 0.2, OptimizerKind::Adagrad, 1000, 200),
    ("3E-TE-3H-TH", 0.2, OptimizerKind::Adagrad, 1000, 200),
];

fn all_presets() -> Vec<Preset> {
    let mut presets = Vec::new();
    let mut push = |dataset: &str, dim: usize, rows: &[PresetRow; 11]| {
        for &(kind_name, lr, optimizer, batch_size, negatives) in rows {
            let kind = ModelKind::parse(kind_name).expect("preset kind");
            let slug: String = kind_name
                .chars()
                .filter(|c| *c != '-')
                .collect::<String>()
                .to_ascii_lowercase();
            presets.push(Preset {
                name: format!("{dataset}-{dim}-{slug}"),
                kind,
                dim,
                lr,
                optimizer,
                batch_size,
                negatives,
            });
        }
    };
    push("wn18rr", 32, &WN18RR_32);
    for dim in [200, 300, 500] {
        push("wn18rr", dim, &WN18RR_HIGH);
    }
    push("fb15k237", 32, &FB15K237_32);
    push("fb15k", 32, &FB15K_32);
    presets
}

fn preset_help() -> String {
    let mut out = String::from("Presets (--preset NAME):\n");
    for p in all_presets() {
        out.push_str(&format!(
            "  {:<28} {} dim={} lr={} {} batch={} negatives={}\n",
            p.name,
            p.kind,
            p.dim,
            p.lr,
            p.optimizer.name(),
            p.batch_size,
            p.negatives
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Settings resolution: defaults < preset < config file < flags
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Clone)]
struct TrainSettings {
    model: Option<String>,
    variant: Option<String>,
    dim: Option<usize>,
    lr: Option<f64>,
    optimizer: Option<String>,
    batch_size: Option<usize>,
    negatives: Option<usize>,
    max_epochs: Option<usize>,
    validate_every: Option<usize>,
    patience: Option<usize>,
    seed: Option<u64>,
}

impl TrainSettings {
    fn overlay(&mut self, other: TrainSettings) {
        macro_rules! take {
            ($field:ident) => {
                if other.$field.is_some() {
                    self.$field = other.$field;
                }
            };
        }
        take!(model);
        take!(variant);
        take!(dim);
        take!(lr);
        take!(optimizer);
        take!(batch_size);
        take!(negatives);
        take!(max_epochs);
        take!(validate_every);
        take!(patience);
        take!(seed);
    }

    fn from_preset(name: &str) -> Result<TrainSettings, CliError> {
        let preset = all_presets()
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| CliError::Usage(format!("unknown preset {name:?}; see --help")))?;
        Ok(TrainSettings {
            model: Some(preset.kind.name().to_string()),
            dim: Some(preset.dim),
            lr: Some(preset.lr),
            optimizer: Some(preset.optimizer.name().to_string()),
            batch_size: Some(preset.batch_size),
            negatives: Some(preset.negatives),
            ..Default::default()
        })
    }

    fn from_config_file(path: &Path) -> Result<TrainSettings, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut settings = TrainSettings::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "{}:{}: expected `key = value`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            let value = value.trim().to_string();
            let bad = |what: &str| {
                CliError::Usage(format!(
                    "{}:{}: bad {what} value {value:?}",
                    path.display(),
                    lineno + 1
                ))
            };
            match key {
                "model" => settings.model = Some(value),
                "variant" => settings.variant = Some(value),
                "dim" => settings.dim = Some(value.parse().map_err(|_| bad("dim"))?),
                "lr" => settings.lr = Some(value.parse().map_err(|_| bad("lr"))?),
                "optimizer" => settings.optimizer = Some(value),
                "batch_size" => {
                    settings.batch_size = Some(value.parse().map_err(|_| bad("batch_size"))?)
                }
                "negatives" => {
                    settings.negatives = Some(value.parse().map_err(|_| bad("negatives"))?)
                }
                "max_epochs" => {
                    settings.max_epochs = Some(value.parse().map_err(|_| bad("max_epochs"))?)
                }
                "validate_every" => {
                    settings.validate_every =
                        Some(value.parse().map_err(|_| bad("validate_every"))?)
                }
                "patience" => settings.patience = Some(value.parse().map_err(|_| bad("patience"))?),
                "seed" => settings.seed = Some(value.parse().map_err(|_| bad("seed"))?),
                other => {
                    return Err(CliError::Usage(format!(
                        "{}:{}: unknown config key {other:?}",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Ok(settings)
    }

    fn from_flags(args: &TrainArgs) -> TrainSettings {
        TrainSettings {
            model: args.model.clone(),
            variant: args.variant.clone(),
            dim: args.dim,
            lr: args.lr,
            optimizer: args.optimizer.clone(),
            batch_size: args.batch_size,
            negatives: args.negatives,
            max_epochs: args.max_epochs,
            validate_every: args.validate_every,
            patience: args.patience,
            seed: args.seed,
        }
    }

    fn finalize(self) -> Result<TrainConfig, CliError> {
        let model_name = self
            .model
            .ok_or_else(|| CliError::Usage("no model given: use --model or --preset".into()))?;
        let kind = parse_kind(&model_name)?;
        let mut config = TrainConfig::new(kind, self.dim.unwrap_or(32));
        if let Some(v) = self.variant {
            config.variant = ScoreVariant::parse(&v)
                .ok_or_else(|| CliError::Usage(format!("unknown variant {v:?}")))?;
        }
        if let Some(lr) = self.lr {
            config.learning_rate = lr;
        }
        if let Some(opt) = self.optimizer {
            config.optimizer = OptimizerKind::parse(&opt)
                .ok_or_else(|| CliError::Usage(format!("unknown optimizer {opt:?}")))?;
        }
        if let Some(b) = self.batch_size {
            config.batch_size = b;
        }
        if let Some(n) = self.negatives {
            config.negatives = n;
        }
        if let Some(e) = self.max_epochs {
            config.max_epochs = e;
        }
        if let Some(v) = self.validate_every {
            config.validate_every = v;
        }
        if let Some(p) = self.patience {
            config.patience = p;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if !config.kind.legal_variants().contains(&config.variant) {
            return Err(CliError::Usage(format!(
                "variant {} is not defined for {}",
                config.variant, config.kind
            )));
        }
        Ok(config)
    }
}

fn parse_kind(name: &str) -> Result<ModelKind, CliError> {
    ModelKind::parse(name).ok_or_else(|| {
        let known: Vec<&str> = ALL_KINDS.iter().map(|k| k.name()).collect();
        CliError::Usage(format!(
            "unknown model kind {name:?}; expected one of {}",
            known.join(", ")
        ))
    })
}

fn resolve_data_dir(flag: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    if let Some(dir) = flag {
        return Ok(dir.clone());
    }
    match std::env::var_os("HYKGE_DATA_DIR") {
        Some(dir) => Ok(PathBuf::from(dir)),
        None => Err(CliError::Usage(
            "no dataset directory: pass --data-dir or set HYKGE_DATA_DIR".into(),
        )),
    }
}

fn parse_mode(s: &str) -> Result<RankMode, CliError> {
    RankMode::parse(s).ok_or_else(|| CliError::Usage(format!("unknown mode {s:?}")))
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parses arguments from the process environment and runs; returns the
/// process exit code.
pub fn run() -> i32 {
    let help = preset_help();
    let command = Cli::command().after_help(help);
    let matches = command.get_matches();
    run_with_matches(&matches)
}

fn run_with_matches(matches: &ArgMatches) -> i32 {
    let cli = match Cli::from_arg_matches(matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Some(n) = cli.threads {
        // Ignored when a global pool already exists (e.g. in tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Gradcheck(args) => cmd_gradcheck(args),
        Command::Paramcount(args) => cmd_paramcount(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let data_dir = resolve_data_dir(&args.data_dir)?;
    let base = Dataset::load_dir(&data_dir)?;
    let dataset = if args.reciprocal {
        base.with_reciprocals()
    } else {
        base
    };

    let mut settings = TrainSettings::default();
    if let Some(preset) = &args.preset {
        settings.overlay(TrainSettings::from_preset(preset)?);
    }
    if let Some(config_path) = &args.config {
        settings.overlay(TrainSettings::from_config_file(config_path)?);
    }
    settings.overlay(TrainSettings::from_flags(&args));
    let config = settings.finalize()?;

    fs::create_dir_all(&args.out)?;
    eprintln!(
        "training {} dim={} optimizer={} lr={} batch={} negatives={} on {} ({} entities, {} relations)",
        config.kind,
        config.dim,
        config.optimizer.name(),
        config.learning_rate,
        config.batch_size,
        config.negatives,
        data_dir.display(),
        dataset.n_entities(),
        dataset.n_relations()
    );
    let outcome = training::train_with_progress(&config, &dataset, |rec| match rec.valid_mrr {
        Some(mrr) => eprintln!(
            "epoch {:>4}  loss {:.6}  valid MRR {:.4}",
            rec.epoch, rec.loss, mrr
        ),
        None => eprintln!("epoch {:>4}  loss {:.6}", rec.epoch, rec.loss),
    })?;

    let vocab_hash = dataset.vocab.hash();
    data::save_checkpoint(&outcome.best, vocab_hash, &args.out.join("best.ckpt"))?;
    data::save_checkpoint(
        &outcome.final_state,
        vocab_hash,
        &args.out.join("final.ckpt"),
    )?;
    training::write_training_log(&args.out.join("train.log"), &outcome.log)?;

    if !dataset.valid.is_empty() {
        let metrics = if args.reciprocal {
            eval::evaluate_both_directions(
                &outcome.best,
                &dataset,
                &dataset.valid,
                RankMode::Filtered,
            )?
        } else {
            eval::evaluate(&outcome.best, &dataset, &dataset.valid, RankMode::Filtered)?
        };
        println!(
            "{}",
            eval::metrics_table(&[("valid (best)".to_string(), metrics)])
        );
    }
    eprintln!("checkpoints and log written to {}", args.out.display());
    Ok(())
}

fn cmd_evaluate(args: EvalArgs) -> Result<(), CliError> {
    let data_dir = resolve_data_dir(&args.data_dir)?;
    let base = Dataset::load_dir(&data_dir)?;
    let dataset = if args.reciprocal {
        base.with_reciprocals()
    } else {
        base
    };
    let mode = parse_mode(&args.mode)?;
    let split: &[crate::data::Triple] = match args.split.as_str() {
        "test" => &dataset.test,
        "valid" => &dataset.valid,
        "train" => &dataset.train,
        other => return Err(CliError::Usage(format!("unknown split {other:?}"))),
    };

    let ckpt = data::load_checkpoint(&args.checkpoint)?;
    ckpt.ensure_vocab(&dataset)?;
    let state = ckpt.state;

    let mut tables: Vec<(String, Vec<(String, Metrics)>)> = Vec::new();
    let global = if args.reciprocal {
        eval::evaluate_both_directions(&state, &dataset, split, mode)?
    } else {
        eval::evaluate(&state, &dataset, split, mode)?
    };
    tables.push(("global".into(), vec![("all".to_string(), global)]));

    for slice in &args.slice {
        match slice.as_str() {
            "per-relation" => {
                let per_rel = eval::per_relation_metrics(&state, &dataset, split, mode)?;
                let rows: Vec<(String, Metrics)> = per_rel
                    .into_iter()
                    .map(|(r, m)| (dataset.vocab.relation_name(r).to_string(), m))
                    .collect();
                tables.push(("per-relation".into(), rows));
            }
            "patterns" => {
                let report = classify_patterns(&dataset, &PatternThresholds::default());
                let mut rows = Vec::new();
                let named = [
                    ("symmetry", &report.slices.symmetry),
                    ("antisymmetry", &report.slices.antisymmetry),
                    ("inversion", &report.slices.inversion),
                    ("composition", &report.slices.composition),
                    ("multiplicity", &report.slices.multiplicity),
                ];
                for (name, indices) in named {
                    if indices.is_empty() {
                        continue;
                    }
                    let subset: Vec<_> = indices.iter().map(|&i| dataset.test[i]).collect();
                    let metrics = eval::evaluate(&state, &dataset, &subset, mode)?;
                    rows.push((name.to_string(), metrics));
                }
                tables.push(("patterns".into(), rows));
            }
            "categories" => {
                let categories = classify_complex(&dataset, 1.5);
                let mut rows = Vec::new();
                for cat in [
                    ComplexCategory::OneToOne,
                    ComplexCategory::OneToMany,
                    ComplexCategory::ManyToOne,
                    ComplexCategory::ManyToMany,
                ] {
                    let subset: Vec<_> = split
                        .iter()
                        .copied()
                        .filter(|t| categories.get(&t.relation) == Some(&cat))
                        .collect();
                    if subset.is_empty() {
                        continue;
                    }
                    let metrics = eval::evaluate(&state, &dataset, &subset, mode)?;
                    rows.push((cat.name().to_string(), metrics));
                }
                tables.push(("categories".into(), rows));
            }
            other => {
                return Err(CliError::Usage(format!(
                    "unknown slice {other:?}; expected per-relation, patterns, or categories"
                )))
            }
        }
    }

    for (title, rows) in &tables {
        println!("== {title} ==");
        println!("{}", eval::metrics_table(rows));
    }
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        for (title, rows) in &tables {
            let file = out.join(format!("{}.csv", title.replace(' ', "_")));
            fs::write(&file, eval::metrics_csv(rows))?;
        }
        eprintln!("CSV reports written to {}", out.display());
    }
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let data_dir = resolve_data_dir(&args.data_dir)?;
    let dataset = Dataset::load_dir(&data_dir)?;
    let selection = match args.khs_split.as_str() {
        "all" => SplitSelection::All,
        "train" => SplitSelection::Train,
        "valid" => SplitSelection::Valid,
        "test" => SplitSelection::Test,
        other => return Err(CliError::Usage(format!("unknown khs split {other:?}"))),
    };

    let mut csv_files: Vec<(String, String)> = Vec::new();

    // Hierarchy scores, most hierarchical first. The dyad column uses the
    // train split (the reference-table convention); the closure column is
    // the transitive-closure score over the selected splits.
    let dyad = khs_adjacency_per_relation(&dataset, SplitSelection::Train);
    let closure = khs_per_relation(&dataset, selection);
    let mut khs_rows: Vec<(String, f64, f64)> = dyad
        .iter()
        .map(|(&r, &s)| {
            (
                dataset.vocab.relation_name(r).to_string(),
                s,
                closure.get(&r).copied().unwrap_or(f64::NAN),
            )
        })
        .collect();
    khs_rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    println!("== hierarchy per relation (dyad Khs on train / closure Khs) ==");
    let mut khs_csv = String::from("relation,khs_dyad_train,khs_closure\n");
    for (name, dyad_score, closure_score) in &khs_rows {
        println!("{dyad_score:>8.4}  {closure_score:>8.4}  {name}");
        khs_csv.push_str(&format!("{name},{dyad_score:.6},{closure_score:.6}\n"));
    }
    println!();
    csv_files.push(("khs.csv".into(), khs_csv));

    // Multiplicity per split.
    println!(
        "== multiplicity ({} pairs) ==",
        if args.undirected {
            "undirected"
        } else {
            "directed"
        }
    );
    let mut mult_csv = String::from("split,triples,multiplicity,fraction\n");
    for (name, split) in [
        ("train", &dataset.train),
        ("valid", &dataset.valid),
        ("test", &dataset.test),
    ] {
        let report = classify_multiplicity(split, !args.undirected);
        println!(
            "{name:>5}: {} of {} triples ({:.2}%)",
            report.count,
            split.len(),
            report.fraction * 100.0
        );
        mult_csv.push_str(&format!(
            "{name},{},{},{:.6}\n",
            split.len(),
            report.count,
            report.fraction
        ));
    }
    println!();
    csv_files.push(("multiplicity.csv".into(), mult_csv));

    // Relation frequency over the test split.
    println!("== relation frequency (test split) ==");
    let freq = relation_frequency(&dataset.test).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut freq_rows: Vec<(String, usize, f64)> = freq
        .iter()
        .map(|(&r, &(c, f))| (dataset.vocab.relation_name(r).to_string(), c, f))
        .collect();
    freq_rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut freq_csv = String::from("relation,count,fraction\n");
    for (name, count, fraction) in &freq_rows {
        println!("{count:>8} ({:>6.2}%)  {name}", fraction * 100.0);
        freq_csv.push_str(&format!("{name},{count},{fraction:.6}\n"));
    }
    println!();
    csv_files.push(("frequency.csv".into(), freq_csv));

    // Complex-relation categories.
    println!("== complex-relation categories (train averages, threshold 1.5) ==");
    let categories = classify_complex(&dataset, 1.5);
    let mut cat_counts: HashMap<&str, usize> = HashMap::new();
    let mut cat_csv = String::from("relation,category\n");
    for (&r, &cat) in &categories {
        *cat_counts.entry(cat.name()).or_default() += 1;
        cat_csv.push_str(&format!(
            "{},{}\n",
            dataset.vocab.relation_name(r),
            cat.name()
        ));
    }
    for cat in ["1-1", "1-n", "n-1", "n-n"] {
        println!(
            "{cat}: {} relations",
            cat_counts.get(cat).copied().unwrap_or(0)
        );
    }
    println!();
    csv_files.push(("categories.csv".into(), cat_csv));

    // Pattern classification.
    println!("== relation patterns (train split) ==");
    let report = classify_patterns(&dataset, &PatternThresholds::default());
    let mut pattern_csv =
        String::from("relation,pairs,reverse_fraction,symmetric,antisymmetric,inverse_partners\n");
    let mut n_sym = 0;
    let mut n_anti = 0;
    let mut n_inv = 0;
    for (&r, info) in &report.per_relation {
        if info.symmetric {
            n_sym += 1;
        }
        if info.antisymmetric {
            n_anti += 1;
        }
        if !info.inverse_partners.is_empty() {
            n_inv += 1;
        }
        let partners = info
            .inverse_partners
            .iter()
            .map(|&p| dataset.vocab.relation_name(p).to_string())
            .collect::<Vec<_>>()
            .join(";");
        pattern_csv.push_str(&format!(
            "{},{},{:.4},{},{},{}\n",
            dataset.vocab.relation_name(r),
            info.pairs,
            info.reverse_fraction,
            info.symmetric,
            info.antisymmetric,
            partners
        ));
    }
    println!(
        "symmetric: {n_sym}, antisymmetric: {n_anti}, with inversion partner: {n_inv}, composition witnesses: {}",
        report.compositions.len()
    );
    println!(
        "test slices: symmetry {}, antisymmetry {}, inversion {}, composition {}, multiplicity {}",
        report.slices.symmetry.len(),
        report.slices.antisymmetry.len(),
        report.slices.inversion.len(),
        report.slices.composition.len(),
        report.slices.multiplicity.len()
    );
    csv_files.push(("patterns.csv".into(), pattern_csv));
    let mut slice_csv = String::from("pattern,test_index\n");
    for (name, indices) in [
        ("symmetry", &report.slices.symmetry),
        ("antisymmetry", &report.slices.antisymmetry),
        ("inversion", &report.slices.inversion),
        ("composition", &report.slices.composition),
        ("multiplicity", &report.slices.multiplicity),
    ] {
        for &i in indices {
            slice_csv.push_str(&format!("{name},{i}\n"));
        }
    }
    csv_files.push(("pattern_slices.csv".into(), slice_csv));

    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        for (name, content) in csv_files {
            fs::write(out.join(name), content)?;
        }
        eprintln!("CSV reports written to {}", out.display());
    }
    Ok(())
}

fn cmd_gradcheck(args: GradcheckArgs) -> Result<(), CliError> {
    let pairs: Vec<(ModelKind, ScoreVariant)> = match &args.model {
        Some(name) => {
            let kind = parse_kind(name)?;
            kind.legal_variants().iter().map(|&v| (kind, v)).collect()
        }
        None => all_kind_variants(),
    };
    let mut worst: f64 = 0.0;
    for (kind, variant) in pairs {
        let report = finite_difference_check(kind, variant, args.dim, args.draws, args.seed);
        let status = if report.max_rel_err < GRADCHECK_TOLERANCE {
            "ok"
        } else {
            "FAIL"
        };
        println!(
            "{status:<4} {kind:<12} {variant:<22} dim={} draws={} max rel err {:.3e}",
            args.dim, args.draws, report.max_rel_err
        );
        worst = worst.max(report.max_rel_err);
    }
    if worst >= GRADCHECK_TOLERANCE {
        return Err(CliError::Acceptance(format!(
            "gradient check failed: max relative error {worst:.3e} >= {GRADCHECK_TOLERANCE:e}"
        )));
    }
    Ok(())
}

fn cmd_paramcount(args: ParamcountArgs) -> Result<(), CliError> {
    let kind = parse_kind(&args.model)?;
    let (n_entities, n_relations, label) = match (&args.dataset, args.entities, args.relations) {
        (_, Some(e), Some(r)) => (e, r, "custom".to_string()),
        (Some(name), _, _) => match name.to_ascii_lowercase().as_str() {
            "wn18rr" => (40_943, 11, "WN18RR".to_string()),
            "fb15k237" | "fb15k-237" => (14_541, 237, "FB15K-237".to_string()),
            "fb15k" => (14_951, 1_345, "FB15K".to_string()),
            other => return Err(CliError::Usage(format!("unknown dataset {other:?}"))),
        },
        _ => {
            return Err(CliError::Usage(
                "need --dataset or both --entities and --relations".into(),
            ))
        }
    };
    let count = param_count(kind, n_entities, n_relations, args.dim);
    println!(
        "{} on {} (n_e={}, n_r={}, k={}): {} parameters",
        kind, label, n_entities, n_relations, args.dim, count
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_matrix_covers_every_kind_and_dataset() {
        let presets = all_presets();
        // 11 kinds × (wn18rr at 4 dims + fb15k237 + fb15k).
        assert_eq!(presets.len(), 11 * 6);
        let names: Vec<&str> = presets.iter().map(|p| p.name.as_str()).collect();
        assert!(names.contains(&"wn18rr-32-3hth"));
        assert!(names.contains(&"wn18rr-500-2ete2hth"));
        assert!(names.contains(&"fb15k-32-te"));
        // No duplicate names.
        let mut sorted = names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
    }

    #[test]
    fn paper_preset_expands_to_expected_settings() {
        let s = TrainSettings::from_preset("wn18rr-32-3hth").unwrap();
        assert_eq!(s.model.as_deref(), Some("3H-TH"));
        assert_eq!(s.dim, Some(32));
        assert_eq!(s.lr, Some(0.001));
        assert_eq!(s.optimizer.as_deref(), Some("adam"));
        assert_eq!(s.batch_size, Some(500));
        assert_eq!(s.negatives, Some(100));
        let config = s.finalize().unwrap();
        assert_eq!(config.kind, ModelKind::QuatTransH);
        assert_eq!(config.optimizer, OptimizerKind::Adam);
    }

    #[test]
    fn overlay_prefers_later_layers() {
        let mut s = TrainSettings::from_preset("wn18rr-32-te").unwrap();
        s.overlay(TrainSettings {
            lr: Some(0.5),
            ..Default::default()
        });
        assert_eq!(s.lr, Some(0.5));
        assert_eq!(s.batch_size, Some(500));
    }

    #[test]
    fn unknown_preset_is_usage_error() {
        let err = TrainSettings::from_preset("nope").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn help_lists_every_preset() {
        let help = preset_help();
        for p in all_presets() {
            assert!(help.contains(&p.name), "missing preset {}", p.name);
        }
    }

    #[test]
    fn illegal_variant_for_kind_is_rejected() {
        let settings = TrainSettings {
            model: Some("TE".into()),
            variant: Some("inner-product".into()),
            ..Default::default()
        };
        assert_eq!(settings.finalize().unwrap_err().exit_code(), 2);
    }
}
