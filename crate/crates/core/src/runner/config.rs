// SPDX-License-Identifier: Apache-2.0

//! TOML experiment configuration.
//!
//! ```toml
//! [dataset]
//! kind = "blobs"          # blobs | idx | csv
//! classes = 4
//! per_class = 825
//!
//! [al]
//! strategies = ["random", "entropy"]
//! batch_size = 100
//! rounds = 8
//! seed_size = 100
//! ```
//!
//! Every section is flat and unknown keys are rejected.

use super::{ConfigError, ConfigResult};
use crate::data::{RedundancyMode, RedundancySpec};
use crate::learner::{InitPolicy, OptimizerConfig, OptimizerKind, StoppingRule, SubsetTrainSpec, TrainConfig};
use crate::strategies::{SeedKind, Strategy};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    /// Gaussian blobs generated from `data_seed`, shared by all run seeds.
    Blobs { classes: usize, per_class: usize, dim: usize, spread: f64, test_per_class: usize, data_seed: u64 },
    Idx { train_images: PathBuf, train_labels: PathBuf, test_images: PathBuf, test_labels: PathBuf, classes: Option<usize> },
    Csv { train: PathBuf, test: PathBuf, classes: Option<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetConfig {
    pub source: DatasetSource,
    /// Maximum unlabeled instances kept per class.
    pub per_class_cap: Option<usize>,
    pub redundancy: Option<RedundancySpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainSpec {
    pub config: TrainConfig,
    pub policy: InitPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlConfig {
    pub strategies: Vec<Strategy>,
    pub batch_size: usize,
    pub rounds: usize,
    pub seed_size: usize,
    pub seed_init: SeedKind,
    /// Fraction of the pool held out as GLISTER's validation set. Only carved
    /// when a GLISTER run is configured.
    pub val_fraction: f64,
    pub fass_beta: usize,
    pub glister_eta: f64,
}

impl AlConfig {
    pub fn uses_validation(&self) -> bool {
        self.strategies.contains(&Strategy::Glister)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// When false, timing columns are written as 0 so outputs are byte-stable.
    pub record_timing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub train: TrainSpec,
    pub al: AlConfig,
    pub run: RunConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dataset: RawDataset,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    train: RawTrain,
    al: RawAl,
    #[serde(default)]
    run: RawRun,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    kind: String,
    classes: Option<usize>,
    per_class: Option<usize>,
    dim: Option<usize>,
    spread: Option<f64>,
    test_per_class: Option<usize>,
    data_seed: Option<u64>,
    train_images: Option<PathBuf>,
    train_labels: Option<PathBuf>,
    test_images: Option<PathBuf>,
    test_labels: Option<PathBuf>,
    train_csv: Option<PathBuf>,
    test_csv: Option<PathBuf>,
    per_class_cap: Option<usize>,
    redundancy_factor: Option<usize>,
    redundancy_unique: Option<usize>,
    redundancy_mode: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawModel {
    hidden: Option<Vec<usize>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTrain {
    optimizer: Option<String>,
    lr: Option<f64>,
    momentum: Option<f64>,
    weight_decay: Option<f64>,
    beta1: Option<f64>,
    beta2: Option<f64>,
    eps: Option<f64>,
    cosine_tmax: Option<usize>,
    batch_size: Option<usize>,
    augment: Option<bool>,
    target_train_acc: Option<f64>,
    max_epochs: Option<usize>,
    plateau_epochs: Option<usize>,
    policy: Option<String>,
    subset: Option<bool>,
    subset_fraction: Option<f64>,
    subset_refresh_epochs: Option<usize>,
    subset_full_rounds: Option<Vec<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAl {
    strategy: Option<String>,
    strategies: Option<Vec<String>>,
    batch_size: Option<usize>,
    rounds: Option<usize>,
    seed_size: Option<usize>,
    seed_init: Option<String>,
    val_fraction: Option<f64>,
    fass_beta: Option<usize>,
    glister_eta: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    seeds: Option<Vec<u64>>,
    out_dir: Option<PathBuf>,
    record_timing: Option<bool>,
}

pub const DEFAULT_HIDDEN: [usize; 2] = [256, 128];
pub const DEFAULT_AL_BATCH: usize = 1000;
pub const DEFAULT_ROUNDS: usize = 10;
pub const DEFAULT_SEED_SIZE: usize = 1000;
pub const DEFAULT_VAL_FRACTION: f64 = 0.1;
pub const DEFAULT_FASS_BETA: usize = 10;

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_owned(), msg: msg.into() }
}

fn require<T>(v: Option<T>, key: &str, kind: &str) -> ConfigResult<T> {
    v.ok_or_else(|| invalid(key, format!("required for dataset kind {kind:?}")))
}

fn reject_keys(present: &[(&str, bool)], kind: &str) -> ConfigResult<()> {
    match present.iter().find(|(_, p)| *p) {
        Some((k, _)) => Err(invalid(&format!("dataset.{k}"), format!("not used by dataset kind {kind:?}"))),
        None => Ok(()),
    }
}

fn parse_dataset(d: RawDataset) -> ConfigResult<DatasetConfig> {
    let blob_keys = [
        ("per_class", d.per_class.is_some()),
        ("dim", d.dim.is_some()),
        ("spread", d.spread.is_some()),
        ("test_per_class", d.test_per_class.is_some()),
        ("data_seed", d.data_seed.is_some()),
    ];
    let idx_keys = [
        ("train_images", d.train_images.is_some()),
        ("train_labels", d.train_labels.is_some()),
        ("test_images", d.test_images.is_some()),
        ("test_labels", d.test_labels.is_some()),
    ];
    let csv_keys = [("train_csv", d.train_csv.is_some()), ("test_csv", d.test_csv.is_some())];
    let kind = d.kind.as_str();
    let source = match kind {
        "blobs" => {
            reject_keys(&idx_keys, kind)?;
            reject_keys(&csv_keys, kind)?;
            let spread = d.spread.unwrap_or(1.0);
            if !(spread >= 0.0 && spread.is_finite()) {
                return Err(invalid("dataset.spread", format!("{spread} must be finite and >= 0")));
            }
            DatasetSource::Blobs {
                classes: d.classes.unwrap_or(4),
                per_class: d.per_class.unwrap_or(800),
                dim: d.dim.unwrap_or(16),
                spread,
                test_per_class: d.test_per_class.unwrap_or(250),
                data_seed: d.data_seed.unwrap_or(0),
            }
        }
        "idx" => {
            reject_keys(&blob_keys, kind)?;
            reject_keys(&csv_keys, kind)?;
            DatasetSource::Idx {
                train_images: require(d.train_images, "dataset.train_images", kind)?,
                train_labels: require(d.train_labels, "dataset.train_labels", kind)?,
                test_images: require(d.test_images, "dataset.test_images", kind)?,
                test_labels: require(d.test_labels, "dataset.test_labels", kind)?,
                classes: d.classes,
            }
        }
        "csv" => {
            reject_keys(&blob_keys, kind)?;
            reject_keys(&idx_keys, kind)?;
            DatasetSource::Csv {
                train: require(d.train_csv, "dataset.train_csv", kind)?,
                test: require(d.test_csv, "dataset.test_csv", kind)?,
                classes: d.classes,
            }
        }
        other => return Err(invalid("dataset.kind", format!("unknown kind {other:?}; valid: blobs, idx, csv"))),
    };
    if matches!(d.classes, Some(c) if c < 2) {
        return Err(invalid("dataset.classes", "need at least 2 classes"));
    }
    if d.per_class_cap == Some(0) {
        return Err(invalid("dataset.per_class_cap", "must be at least 1"));
    }
    let redundancy = match (d.redundancy_factor, d.redundancy_unique, d.redundancy_mode) {
        (None, None, None) => None,
        (Some(factor), Some(n_unique), mode) => {
            if factor == 0 {
                return Err(invalid("dataset.redundancy_factor", "must be at least 1"));
            }
            let mode = match mode.as_deref().unwrap_or("duplicate") {
                "duplicate" => RedundancyMode::Duplicate,
                "augment" => RedundancyMode::Augment,
                other => {
                    return Err(invalid("dataset.redundancy_mode", format!("unknown mode {other:?}; valid: duplicate, augment")))
                }
            };
            Some(RedundancySpec { n_unique, factor, mode })
        }
        _ => return Err(invalid("dataset.redundancy_factor", "redundancy needs both redundancy_factor and redundancy_unique")),
    };
    Ok(DatasetConfig { source, per_class_cap: d.per_class_cap, redundancy })
}

fn parse_train(t: RawTrain) -> ConfigResult<TrainSpec> {
    let mut optimizer = match t.optimizer.as_deref().unwrap_or("sgd") {
        "sgd" => OptimizerConfig::sgd(),
        "adam" => OptimizerConfig::adam(),
        other => return Err(invalid("train.optimizer", format!("unknown optimizer {other:?}; valid: sgd, adam"))),
    };
    if let Some(v) = t.lr {
        optimizer.lr = v;
    }
    if let Some(v) = t.momentum {
        optimizer.momentum = v;
    }
    if let Some(v) = t.weight_decay {
        optimizer.weight_decay = v;
    }
    if let Some(v) = t.beta1 {
        optimizer.betas.0 = v;
    }
    if let Some(v) = t.beta2 {
        optimizer.betas.1 = v;
    }
    if let Some(v) = t.eps {
        optimizer.eps = v;
    }
    if let Some(v) = t.cosine_tmax {
        optimizer.cosine_tmax = v;
    }
    if optimizer.kind == OptimizerKind::Adam && t.momentum.is_some() {
        return Err(invalid("train.momentum", "not used by adam"));
    }
    optimizer.validate().map_err(|e| invalid("train", e.to_string()))?;

    let defaults = StoppingRule::default();
    let stop = StoppingRule {
        target_train_acc: t.target_train_acc.unwrap_or(defaults.target_train_acc),
        max_epochs: t.max_epochs.unwrap_or(defaults.max_epochs),
        plateau_epochs: t.plateau_epochs.unwrap_or(defaults.plateau_epochs),
    };
    if !(stop.target_train_acc > 0.0 && stop.target_train_acc <= 1.0) {
        return Err(invalid("train.target_train_acc", "must be in (0, 1]"));
    }
    if stop.max_epochs == 0 || stop.plateau_epochs == 0 {
        return Err(invalid("train.max_epochs", "max_epochs and plateau_epochs must be positive"));
    }
    let sd = SubsetTrainSpec::default();
    let subset = SubsetTrainSpec {
        enabled: t.subset.unwrap_or(false),
        fraction: t.subset_fraction.unwrap_or(sd.fraction),
        refresh_epochs: t.subset_refresh_epochs.unwrap_or(sd.refresh_epochs),
        full_rounds: t.subset_full_rounds.unwrap_or_default(),
    };
    if !(subset.fraction > 0.0 && subset.fraction <= 1.0) {
        return Err(invalid("train.subset_fraction", format!("{} not in (0, 1]", subset.fraction)));
    }
    if subset.refresh_epochs == 0 {
        return Err(invalid("train.subset_refresh_epochs", "must be positive"));
    }
    let batch_size = t.batch_size.unwrap_or(32);
    if batch_size == 0 {
        return Err(invalid("train.batch_size", "must be positive"));
    }
    let policy = match t.policy.as_deref().unwrap_or("reset") {
        "reset" => InitPolicy::Reset,
        "update" => InitPolicy::Update,
        other => return Err(invalid("train.policy", format!("unknown policy {other:?}; valid: reset, update"))),
    };
    Ok(TrainSpec {
        config: TrainConfig { optimizer, stop, augment: t.augment.unwrap_or(false), subset, batch_size },
        policy,
    })
}

fn parse_al(a: RawAl, lr: f64) -> ConfigResult<AlConfig> {
    let names = match (a.strategy, a.strategies) {
        (Some(s), None) => vec![s],
        (None, Some(list)) => list,
        (Some(_), Some(_)) => return Err(invalid("al.strategy", "give either strategy or strategies, not both")),
        (None, None) => return Err(invalid("al.strategy", "missing")),
    };
    if names.is_empty() {
        return Err(invalid("al.strategies", "empty list"));
    }
    let mut strategies = Vec::with_capacity(names.len());
    for n in &names {
        let s: Strategy = n.parse()?;
        if strategies.contains(&s) {
            return Err(invalid("al.strategies", format!("{n:?} listed twice")));
        }
        strategies.push(s);
    }
    let seed_init = match a.seed_init {
        None => SeedKind::Random,
        Some(s) => s.parse().map_err(|e: String| invalid("al.seed_init", e))?,
    };
    let cfg = AlConfig {
        strategies,
        batch_size: a.batch_size.unwrap_or(DEFAULT_AL_BATCH),
        rounds: a.rounds.unwrap_or(DEFAULT_ROUNDS),
        seed_size: a.seed_size.unwrap_or(DEFAULT_SEED_SIZE),
        seed_init,
        val_fraction: a.val_fraction.unwrap_or(DEFAULT_VAL_FRACTION),
        fass_beta: a.fass_beta.unwrap_or(DEFAULT_FASS_BETA),
        glister_eta: a.glister_eta.unwrap_or(lr),
    };
    if cfg.batch_size == 0 {
        return Err(invalid("al.batch_size", "must be positive"));
    }
    if cfg.seed_size == 0 {
        return Err(invalid("al.seed_size", "must be positive"));
    }
    if !(0.0..1.0).contains(&cfg.val_fraction) {
        return Err(invalid("al.val_fraction", format!("{} not in [0, 1)", cfg.val_fraction)));
    }
    if cfg.uses_validation() && cfg.val_fraction == 0.0 {
        return Err(invalid("al.val_fraction", "glister needs a positive validation fraction"));
    }
    if cfg.fass_beta == 0 {
        return Err(invalid("al.fass_beta", "must be positive"));
    }
    if !(cfg.glister_eta > 0.0 && cfg.glister_eta.is_finite()) {
        return Err(invalid("al.glister_eta", "must be positive"));
    }
    Ok(cfg)
}

/// Instances left for seeding and querying once validation and caps apply.
pub fn usable_pool(n: usize, classes: usize, al: &AlConfig, cap: Option<usize>) -> usize {
    let n_val = if al.uses_validation() { (al.val_fraction * n as f64).ceil() as usize } else { 0 };
    let rest = n.saturating_sub(n_val);
    match cap {
        Some(c) => rest.min(c.saturating_mul(classes)),
        None => rest,
    }
}

/// Checks `seed_size + rounds * batch_size <= usable`.
pub fn check_budget(al: &AlConfig, usable: usize) -> ConfigResult<()> {
    let needed = al.rounds.checked_mul(al.batch_size).and_then(|q| q.checked_add(al.seed_size)).unwrap_or(usize::MAX);
    if needed > usable {
        return Err(ConfigError::Infeasible {
            seed_size: al.seed_size,
            rounds: al.rounds,
            batch_size: al.batch_size,
            needed,
            available: usable,
        });
    }
    Ok(())
}

/// Parses and validates configuration text, filling defaults.
pub fn load_config(text: &str) -> ConfigResult<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let dataset = parse_dataset(raw.dataset)?;
    let hidden = raw.model.hidden.unwrap_or_else(|| DEFAULT_HIDDEN.to_vec());
    if hidden.contains(&0) {
        return Err(invalid("model.hidden", "layer widths must be positive"));
    }
    let train = parse_train(raw.train)?;
    let al = parse_al(raw.al, train.config.optimizer.lr)?;
    let seeds = raw.run.seeds.unwrap_or_else(|| vec![0]);
    if seeds.is_empty() {
        return Err(invalid("run.seeds", "empty list"));
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != seeds.len() {
        return Err(invalid("run.seeds", "duplicate seed"));
    }
    let run = RunConfig {
        seeds,
        out_dir: raw.run.out_dir.unwrap_or_else(|| PathBuf::from("al-lab-out")),
        record_timing: raw.run.record_timing.unwrap_or(true),
    };

    if let DatasetSource::Blobs { classes, per_class, .. } = dataset.source {
        let n = classes * per_class;
        if n == 0 {
            return Err(invalid("dataset.per_class", "dataset would be empty"));
        }
        if let Some(spec) = &dataset.redundancy {
            spec.base_size(n).map_err(|e| invalid("dataset.redundancy_unique", e.to_string()))?;
        }
        check_budget(&al, usable_pool(n, classes, &al, dataset.per_class_cap))?;
    }
    Ok(ExperimentConfig { dataset, model: ModelConfig { hidden }, train, al, run })
}

impl ExperimentConfig {
    /// Resolves relative dataset paths and the output directory against `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.dataset.source {
            DatasetSource::Blobs { .. } => {}
            DatasetSource::Idx { train_images, train_labels, test_images, test_labels, .. } => {
                for p in [train_images, train_labels, test_images, test_labels] {
                    fix(p);
                }
            }
            DatasetSource::Csv { train, test, .. } => {
                fix(train);
                fix(test);
            }
        }
        fix(&mut self.run.out_dir);
    }

    /// Settings that determine results, excluding seeds, output location and timing.
    pub fn fingerprint(&self) -> String {
        let v = serde_json::json!({
            "dataset": self.dataset,
            "model": self.model,
            "train": self.train,
            "al": self.al,
        });
        v.to_string()
    }
}

/// Reads a config file; relative paths inside it resolve against its directory.
pub fn load_config_file(path: &Path) -> ConfigResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.to_owned(), msg: e.to_string() })?;
    let mut cfg = load_config(&text)?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    cfg.rebase(base);
    Ok(cfg)
}
