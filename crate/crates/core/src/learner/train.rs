// SPDX-License-Identifier: Apache-2.0

use super::gradmatch::gradmatch_select_per_class;
use super::model::{accuracy_on, last_layer_gradients, softmax_rows, ModelState};
use super::optim::{adam_step, sgd_step, OptimizerConfig, OptimizerKind};
use super::{LearnerError, Result};
use crate::data::{augment_or_jitter, jitter_sigma, Dataset};
use crate::rng::RngStream;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Training halts when any criterion fires.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub target_train_acc: f64,
    pub max_epochs: usize,
    /// Consecutive epochs without a strict improvement of training accuracy.
    pub plateau_epochs: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self { target_train_acc: 0.99, max_epochs: 300, plateau_epochs: 10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TargetAcc,
    MaxEpochs,
    Plateau,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::TargetAcc => "target_acc",
            StopReason::MaxEpochs => "max_epochs",
            StopReason::Plateau => "plateau",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "target_acc" => Some(Self::TargetAcc),
            "max_epochs" => Some(Self::MaxEpochs),
            "plateau" => Some(Self::Plateau),
            _ => None,
        }
    }
}

/// GradMatch subset training: train on a weighted `fraction` of the labeled
/// set, re-selected every `refresh_epochs`, except in `full_rounds`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetTrainSpec {
    pub enabled: bool,
    pub fraction: f64,
    pub refresh_epochs: usize,
    pub full_rounds: Vec<usize>,
}

impl Default for SubsetTrainSpec {
    fn default() -> Self {
        Self { enabled: false, fraction: 0.3, refresh_epochs: 5, full_rounds: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerConfig,
    pub stop: StoppingRule,
    pub augment: bool,
    pub subset: SubsetTrainSpec,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig::sgd(),
            stop: StoppingRule::default(),
            augment: false,
            subset: SubsetTrainSpec::default(),
            batch_size: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub epochs: usize,
    pub final_train_acc: f64,
    pub wall_s: f64,
    pub updates: usize,
    pub stop_reason: StopReason,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitPolicy {
    Reset,
    Update,
}

/// Fresh He-initialized model (`Reset`) or the previous model unchanged,
/// optimizer slots and schedule position included (`Update`).
pub fn reset_or_update(
    prev: Option<ModelState>,
    policy: InitPolicy,
    dims: &[usize],
    init_rng: &RngStream,
) -> Result<ModelState> {
    match policy {
        InitPolicy::Reset => ModelState::he_init(dims, init_rng),
        InitPolicy::Update => prev.ok_or(LearnerError::NoPreviousModel),
    }
}

fn subset_for_epoch(model: &ModelState, ds: &Dataset, labeled: &[usize], fraction: f64) -> Result<(Vec<usize>, Vec<f64>)> {
    let x = ds.gather(labeled);
    let (logits, pen) = model.forward(x.view())?.into_parts();
    let probs = softmax_rows(&logits);
    let labels = ds.gather_labels(labeled);
    let grads = last_layer_gradients(probs.view(), pen.view(), &labels);
    let sel = gradmatch_select_per_class(grads.view(), &labels, fraction)?;
    let mut ids = Vec::with_capacity(sel.indices.len());
    let mut weights = Vec::with_capacity(sel.indices.len());
    for (&i, &w) in sel.indices.iter().zip(&sel.weights) {
        if w > 0.0 {
            ids.push(labeled[i]);
            weights.push(w);
        }
    }
    if ids.is_empty() {
        // zero target gradient: nothing to match, fall back to the greedy picks uniformly
        ids = sel.indices.iter().map(|&i| labeled[i]).collect();
        weights = vec![1.0; ids.len()];
    }
    Ok((ids, weights))
}

/// Minibatch training on `labeled` until the stopping rule fires.
///
/// Shuffling and augmentation draw from sub-streams of `rng`, so a fixed
/// `(model, labeled, cfg, round, rng)` gives bit-identical results. Training
/// accuracy for the stopping rule is always measured on the full labeled set.
pub fn train(
    mut model: ModelState,
    ds: &Dataset,
    labeled: &[usize],
    cfg: &TrainConfig,
    round: usize,
    rng: &RngStream,
) -> Result<(ModelState, TrainStats)> {
    if labeled.is_empty() {
        return Err(LearnerError::InvalidParameter("training needs at least one labeled instance".into()));
    }
    if cfg.batch_size == 0 {
        return Err(LearnerError::InvalidParameter("batch_size must be positive".into()));
    }
    cfg.optimizer.validate()?;
    let subset_on = cfg.subset.enabled && !cfg.subset.full_rounds.contains(&round);
    if subset_on && (!(cfg.subset.fraction > 0.0 && cfg.subset.fraction <= 1.0) || cfg.subset.refresh_epochs == 0) {
        return Err(LearnerError::InvalidParameter("subset fraction must be in (0, 1] and refresh_epochs >= 1".into()));
    }

    let start = Instant::now();
    let mut shuffle_rng = rng.derive("shuffle");
    let mut augment_rng = rng.derive("augment");
    let sigma = if cfg.augment { jitter_sigma(ds) } else { 0.0 };
    let mut best = f64::NEG_INFINITY;
    let mut stale = 0;
    let mut updates = 0;
    let mut epochs = 0;
    let mut reason = StopReason::MaxEpochs;
    let mut acc = accuracy_on(&model, ds, Some(labeled))?;
    let mut subset: Option<(Vec<usize>, Vec<f64>)> = None;

    for epoch in 0..cfg.stop.max_epochs {
        if subset_on && epoch % cfg.subset.refresh_epochs == 0 {
            subset = Some(subset_for_epoch(&model, ds, labeled, cfg.subset.fraction)?);
        }
        let (ids, weights): (&[usize], Option<&[f64]>) = match &subset {
            Some((ids, w)) => (ids, Some(w)),
            None => (labeled, None),
        };
        let mut order: Vec<usize> = (0..ids.len()).collect();
        shuffle_rng.shuffle(&mut order);

        for chunk in order.chunks(cfg.batch_size) {
            let rows: Vec<usize> = chunk.iter().map(|&k| ids[k]).collect();
            let mut x: Array2<f64> = ds.gather(&rows);
            if cfg.augment {
                for (r, &i) in rows.iter().enumerate() {
                    let a = augment_or_jitter(ds, ds.row(i), sigma, &mut augment_rng);
                    x.row_mut(r).assign(&a);
                }
            }
            let y = ds.gather_labels(&rows);
            let w: Option<Vec<f64>> = weights.map(|w| chunk.iter().map(|&k| w[k]).collect());
            let (_, grads) = match model.weighted_loss_and_grad(x.view(), &y, w.as_deref()) {
                Ok(v) => v,
                Err(LearnerError::NonFiniteLoss { .. }) => return Err(LearnerError::Diverged { epoch }),
                Err(e) => return Err(e),
            };
            let stepped = match cfg.optimizer.kind {
                OptimizerKind::Sgd => sgd_step(&mut model, &grads, &cfg.optimizer),
                OptimizerKind::Adam => adam_step(&mut model, &grads, &cfg.optimizer),
            };
            if let Err(LearnerError::NonFiniteUpdate(_)) = stepped {
                return Err(LearnerError::Diverged { epoch });
            }
            stepped?;
            updates += 1;
        }
        model.epoch += 1;
        epochs = epoch + 1;
        acc = accuracy_on(&model, ds, Some(labeled))?;
        if acc >= cfg.stop.target_train_acc {
            reason = StopReason::TargetAcc;
            break;
        }
        if acc > best {
            best = acc;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.stop.plateau_epochs {
                reason = StopReason::Plateau;
                break;
            }
        }
    }

    let stats = TrainStats {
        epochs,
        final_train_acc: acc,
        wall_s: start.elapsed().as_secs_f64(),
        updates,
        stop_reason: reason,
    };
    Ok((model, stats))
}
