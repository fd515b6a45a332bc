// SPDX-License-Identifier: Apache-2.0

use super::model::{Gradients, ModelState, OptimizerSlots};
use super::{LearnerError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub betas: (f64, f64),
    pub eps: f64,
    /// Cosine period in epochs (SGD only).
    pub cosine_tmax: usize,
}

impl OptimizerConfig {
    /// SGD with momentum 0.9, weight decay 5e-4 and a cosine schedule over 300 epochs.
    pub fn sgd() -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            lr: 0.01,
            momentum: 0.9,
            weight_decay: 0.0005,
            betas: (0.9, 0.999),
            eps: 1e-8,
            cosine_tmax: 300,
        }
    }

    /// Adam with betas (0.9, 0.999), no weight decay, constant learning rate.
    pub fn adam() -> Self {
        Self { kind: OptimizerKind::Adam, weight_decay: 0.0, ..Self::sgd() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LearnerError::InvalidParameter(msg));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr {} must be positive", self.lr));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} not in [0, 1)", self.momentum));
        }
        if !(0.0..1.0).contains(&self.betas.0) || !(0.0..1.0).contains(&self.betas.1) {
            return bad(format!("betas {:?} not in [0, 1)", self.betas));
        }
        if !(self.weight_decay >= 0.0) || !(self.eps > 0.0) {
            return bad("weight_decay must be >= 0 and eps > 0".into());
        }
        if self.kind == OptimizerKind::Sgd && self.cosine_tmax == 0 {
            return bad("cosine_tmax must be positive".into());
        }
        Ok(())
    }

    /// Learning rate in effect at schedule position `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self.kind {
            OptimizerKind::Sgd => cosine_lr(self.lr, epoch, self.cosine_tmax),
            OptimizerKind::Adam => self.lr,
        }
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::sgd()
    }
}

/// `lr * (1 + cos(pi * t / t_max)) / 2`, continued periodically past `t_max`.
pub fn cosine_lr(lr: f64, t: usize, t_max: usize) -> f64 {
    if 2 * t == t_max {
        return lr / 2.0;
    }
    lr * (1.0 + (PI * t as f64 / t_max as f64).cos()) / 2.0
}

fn check_finite(model: &ModelState, what: &'static str) -> Result<()> {
    if model.is_finite() {
        Ok(())
    } else {
        Err(LearnerError::NonFiniteUpdate(what))
    }
}

/// `v <- momentum * v + (g + wd * w)`, `w <- w - lr(t) * v`.
pub fn sgd_step(model: &mut ModelState, grads: &Gradients, cfg: &OptimizerConfig) -> Result<()> {
    if cfg.kind != OptimizerKind::Sgd {
        return Err(LearnerError::Optimizer("sgd_step called with a non-SGD config".into()));
    }
    if !matches!(model.slots, OptimizerSlots::Sgd { .. }) {
        model.slots = OptimizerSlots::Sgd { velocity: Gradients::zeros_like(model) };
    }
    let lr = cfg.lr_at(model.epoch);
    let OptimizerSlots::Sgd { velocity } = &mut model.slots else { unreachable!() };
    for l in 0..model.weights.len() {
        let (w, v, g) = (&mut model.weights[l], &mut velocity.weights[l], &grads.weights[l]);
        ndarray::Zip::from(w).and(v).and(g).for_each(|w, v, &g| {
            *v = cfg.momentum * *v + (g + cfg.weight_decay * *w);
            *w -= lr * *v;
        });
        let (b, v, g) = (&mut model.biases[l], &mut velocity.biases[l], &grads.biases[l]);
        ndarray::Zip::from(b).and(v).and(g).for_each(|b, v, &g| {
            *v = cfg.momentum * *v + (g + cfg.weight_decay * *b);
            *b -= lr * *v;
        });
    }
    check_finite(model, "sgd")
}

/// Bias-corrected Adam with a constant learning rate.
pub fn adam_step(model: &mut ModelState, grads: &Gradients, cfg: &OptimizerConfig) -> Result<()> {
    if cfg.kind != OptimizerKind::Adam {
        return Err(LearnerError::Optimizer("adam_step called with a non-Adam config".into()));
    }
    if !matches!(model.slots, OptimizerSlots::Adam { .. }) {
        model.slots = OptimizerSlots::Adam {
            first: Gradients::zeros_like(model),
            second: Gradients::zeros_like(model),
            step: 0,
        };
    }
    let (b1, b2) = cfg.betas;
    let OptimizerSlots::Adam { first, second, step } = &mut model.slots else { unreachable!() };
    *step += 1;
    let c1 = 1.0 - b1.powi(*step as i32);
    let c2 = 1.0 - b2.powi(*step as i32);
    let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
        let g = g + cfg.weight_decay * *p;
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        *p -= cfg.lr * (*m / c1) / ((*v / c2).sqrt() + cfg.eps);
    };
    for l in 0..model.weights.len() {
        ndarray::Zip::from(&mut model.weights[l])
            .and(&mut first.weights[l])
            .and(&mut second.weights[l])
            .and(&grads.weights[l])
            .for_each(|p, m, v, &g| update(p, m, v, g));
        ndarray::Zip::from(&mut model.biases[l])
            .and(&mut first.biases[l])
            .and(&mut second.biases[l])
            .and(&grads.biases[l])
            .for_each(|p, m, v, &g| update(p, m, v, g));
    }
    check_finite(model, "adam")
}
