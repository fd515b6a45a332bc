// SPDX-License-Identifier: Apache-2.0

//! Greedy validation-likelihood selection on the final linear layer.
//!
//! Working parameters `theta = (W, c)` start at the trained last layer. At
//! every greedy step each remaining candidate `i` is scored by the
//! first-order change of the validation log-likelihood under the
//! hypothesized step `theta - eta * g_i`, where `g_i` is the cross-entropy
//! gradient for the predicted label. The winner's step is applied to
//! `theta` before the next round of scoring.

use super::{Result, StrategyError};
use crate::learner::{argmax, softmax_rows, EmbeddingMatrix, ProbMatrix};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

/// Last-layer parameters and the validation set seen through the penultimate layer.
#[derive(Clone, Debug)]
pub struct GlisterContext<'a> {
    /// `C x d` weight of the final linear layer.
    pub weight: ArrayView2<'a, f64>,
    pub bias: ArrayView1<'a, f64>,
    pub val_embeddings: &'a EmbeddingMatrix,
    pub val_labels: &'a [usize],
    /// Step size of the hypothesized update.
    pub eta: f64,
}

fn logits(h: ArrayView2<'_, f64>, w: &Array2<f64>, c: &Array1<f64>) -> Array2<f64> {
    h.dot(&w.t()) + c
}

/// Gradient of the summed validation log-likelihood w.r.t. `(W, c)`.
fn validation_gradient(ctx: &GlisterContext<'_>, w: &Array2<f64>, c: &Array1<f64>) -> (Array2<f64>, Array1<f64>) {
    let h = ctx.val_embeddings.view();
    let mut r = softmax_rows(&logits(h, w, c));
    for (i, &y) in ctx.val_labels.iter().enumerate() {
        r[[i, y]] -= 1.0;
    }
    r.mapv_inplace(|v| -v); // onehot - p
    (r.t().dot(&h), r.sum_axis(Axis(0)))
}

pub fn glister_select(
    probs: &ProbMatrix,
    embeddings: &EmbeddingMatrix,
    ids: &[usize],
    b: usize,
    ctx: &GlisterContext<'_>,
) -> Result<Vec<usize>> {
    let m = ids.len();
    if probs.nrows() != m || embeddings.nrows() != m {
        return Err(StrategyError::Misaligned("glister inputs are not row-aligned".into()));
    }
    if ctx.val_embeddings.nrows() == 0 || ctx.val_labels.len() != ctx.val_embeddings.nrows() {
        return Err(StrategyError::MissingValidation);
    }
    let (classes, d) = ctx.weight.dim();
    if embeddings.dim() != d || ctx.val_embeddings.dim() != d || ctx.bias.len() != classes {
        return Err(StrategyError::Misaligned("last-layer shape does not match embeddings".into()));
    }
    if let Some(&y) = ctx.val_labels.iter().find(|&&y| y >= classes) {
        return Err(StrategyError::InvalidParameter(format!("validation label {y} outside {classes} classes")));
    }
    if b > m {
        return Err(StrategyError::BatchTooLarge { b, available: m });
    }

    let h = embeddings.view();
    let hypothesized: Vec<usize> = probs.view().rows().into_iter().map(argmax).collect();
    let mut w = ctx.weight.to_owned();
    let mut c = ctx.bias.to_owned();
    let mut taken = vec![false; m];
    let mut chosen = Vec::with_capacity(b);

    for _ in 0..b {
        let (gw, gc) = validation_gradient(ctx, &w, &c);
        // candidate residuals p_i - onehot(yhat_i) under the current parameters
        let mut resid = softmax_rows(&logits(h, &w, &c));
        for (i, &y) in hypothesized.iter().enumerate() {
            resid[[i, y]] -= 1.0;
        }
        // <grad L_V, g_i> = sum_k resid_ik (gw_k . h_i + gc_k)
        let proj = h.dot(&gw.t()) + &gc;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            if taken[i] {
                continue;
            }
            let inner: f64 = resid.row(i).dot(&proj.row(i));
            let score = -ctx.eta * inner + 0.0;
            best = match best {
                Some((j, s)) if !(score > s || (score == s && ids[i] < ids[j])) => Some((j, s)),
                _ => Some((i, score)),
            };
        }
        let (pick, _) = best.expect("b <= m");
        taken[pick] = true;
        chosen.push(ids[pick]);
        for k in 0..classes {
            let r = resid[[pick, k]];
            w.row_mut(k).scaled_add(-ctx.eta * r, &h.row(pick));
            c[k] -= ctx.eta * r;
        }
    }
    Ok(chosen)
}
