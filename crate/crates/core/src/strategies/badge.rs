// SPDX-License-Identifier: Apache-2.0

//! Gradient embeddings and k-means++ seeding.

use super::geometry::squared_distances_to;
use super::{Result, StrategyError};
use crate::learner::{argmax, EmbeddingMatrix, ProbMatrix};
use crate::rng::RngStream;
use ndarray::{Array1, Array2, ArrayView2};

/// Hypothesized-label gradients of the last linear layer:
/// row `i` is `(p_i - onehot(argmax p_i)) (x) h_i`, class-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GradEmbedding(Array2<f64>);

impl GradEmbedding {
    pub fn new(probs: &ProbMatrix, penultimate: &EmbeddingMatrix) -> Result<Self> {
        let (p, h) = (probs.view(), penultimate.view());
        if p.nrows() != h.nrows() {
            return Err(StrategyError::Misaligned(format!("{} probability rows vs {} embeddings", p.nrows(), h.nrows())));
        }
        let (m, c, d) = (p.nrows(), p.ncols(), h.ncols());
        let mut out = Array2::zeros((m, c * d));
        for i in 0..m {
            let yhat = argmax(p.row(i));
            for k in 0..c {
                let r = p[[i, k]] - if k == yhat { 1.0 } else { 0.0 };
                if r == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[[i, k * d + j]] = r * h[[i, j]];
                }
            }
        }
        Ok(Self(out))
    }

    pub fn from_rows(rows: Array2<f64>) -> Self {
        Self(rows)
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BadgeSelection {
    pub ids: Vec<usize>,
    /// True when some seeds had to be drawn uniformly because every
    /// remaining row had zero weight.
    pub degenerate: bool,
}

/// Probability of each row being the next seed given the `chosen` rows:
/// squared norm when nothing is chosen yet, squared distance to the nearest
/// chosen row otherwise. `None` when every weight is zero.
pub fn kmeanspp_next_distribution(rows: ArrayView2<'_, f64>, chosen: &[usize]) -> Option<Vec<f64>> {
    let weights = nearest_weights(rows, chosen);
    normalize(&weights.to_vec())
}

fn nearest_weights(rows: ArrayView2<'_, f64>, chosen: &[usize]) -> Array1<f64> {
    let mut w: Array1<f64> = if chosen.is_empty() {
        rows.map_axis(ndarray::Axis(1), |r| r.dot(&r))
    } else {
        Array1::from_elem(rows.nrows(), f64::INFINITY)
    };
    for &c in chosen {
        let d = squared_distances_to(rows, rows.row(c));
        w.zip_mut_with(&d, |a, &b| *a = a.min(b));
    }
    for &c in chosen {
        w[c] = 0.0;
    }
    w
}

fn normalize(w: &[f64]) -> Option<Vec<f64>> {
    let total: f64 = w.iter().sum();
    (total > 0.0 && total.is_finite()).then(|| w.iter().map(|v| v / total).collect())
}

fn draw(weights: &Array1<f64>, taken: &[bool], rng: &mut RngStream) -> (usize, bool) {
    let total: f64 = weights.iter().zip(taken).filter(|(_, &t)| !t).map(|(w, _)| w).sum();
    if total > 0.0 && total.is_finite() {
        let target = rng.uniform() * total;
        let mut acc = 0.0;
        let mut last = None;
        for (i, (&w, &t)) in weights.iter().zip(taken).enumerate() {
            if t || w <= 0.0 {
                continue;
            }
            acc += w;
            last = Some(i);
            if acc > target {
                return (i, false);
            }
        }
        if let Some(i) = last {
            return (i, false);
        }
    }
    let free: Vec<usize> = (0..taken.len()).filter(|&i| !taken[i]).collect();
    (free[rng.below(free.len())], true)
}

/// k-means++ seeding (no Lloyd iterations) over gradient embeddings; the
/// first seed is drawn proportionally to the squared row norm.
pub fn badge_select(emb: &GradEmbedding, ids: &[usize], b: usize, rng: &RngStream) -> Result<BadgeSelection> {
    let rows = emb.view();
    let m = rows.nrows();
    if ids.len() != m {
        return Err(StrategyError::Misaligned(format!("{} ids for {m} gradient rows", ids.len())));
    }
    if b > m {
        return Err(StrategyError::BatchTooLarge { b, available: m });
    }
    let mut r = rng.derive("badge");
    let mut taken = vec![false; m];
    let mut weights = rows.map_axis(ndarray::Axis(1), |row| row.dot(&row));
    let mut chosen = Vec::with_capacity(b);
    let mut degenerate = false;
    for _ in 0..b {
        let (pick, uniform) = draw(&weights, &taken, &mut r);
        degenerate |= uniform;
        taken[pick] = true;
        chosen.push(pick);
        if chosen.len() == 1 {
            weights.fill(f64::INFINITY);
        }
        let d = squared_distances_to(rows, rows.row(pick));
        weights.zip_mut_with(&d, |a, &b| *a = a.min(b));
        weights[pick] = 0.0;
    }
    Ok(BadgeSelection { ids: chosen.iter().map(|&k| ids[k]).collect(), degenerate })
}
