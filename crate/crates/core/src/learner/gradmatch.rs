// SPDX-License-Identifier: Apache-2.0

//! Weighted subset selection by gradient matching.
//!
//! Orthogonal matching pursuit with nonnegative weights: each step adds the
//! row most positively correlated with the current residual, then refits all
//! weights on the support with an exact nonnegative least-squares solve.
//! Because the support only grows, the residual never increases. For small
//! selections a short swap pass then tries exchanging each pick for the unselected rows most
//! correlated with the residual, keeping any exchange that lowers it.

use super::{LearnerError, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

#[derive(Clone, Debug, PartialEq)]
pub struct GradMatchSelection {
    /// Row indices in selection order.
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    /// `||sum_i w_i g_i - sum_j g_j||` after each greedy step; the last
    /// entry also reflects the swap pass.
    pub residuals: Vec<f64>,
}

/// Nonnegative least squares `min ||A w - b||, w >= 0` via Lawson-Hanson,
/// with `A` given as its Gram matrix `A^T A` and `A^T b`.
pub fn nnls(gram: ArrayView2<'_, f64>, atb: ArrayView1<'_, f64>) -> Array1<f64> {
    let k = atb.len();
    let mut w = Array1::<f64>::zeros(k);
    let mut passive = vec![false; k];
    let scale = gram.diag().iter().fold(0.0f64, |a, &b| a.max(b)).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale * k.max(1) as f64;

    for _outer in 0..3 * k + 10 {
        let grad = &atb - &gram.dot(&w);
        let candidate = (0..k)
            .filter(|&j| !passive[j])
            .max_by(|&a, &b| grad[a].total_cmp(&grad[b]).then(b.cmp(&a)));
        match candidate {
            Some(j) if grad[j] > tol => passive[j] = true,
            _ => break,
        }
        for _inner in 0..3 * k + 10 {
            let set: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
            let s_set = solve_spd_subset(gram, atb, &set);
            if s_set.iter().all(|&v| v > 0.0) {
                w.fill(0.0);
                for (&j, &v) in set.iter().zip(&s_set) {
                    w[j] = v;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (&j, &s) in set.iter().zip(&s_set) {
                if s <= 0.0 {
                    let denom = w[j] - s;
                    if denom > 0.0 {
                        alpha = alpha.min(w[j] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            for (&j, &s) in set.iter().zip(&s_set) {
                w[j] += alpha * (s - w[j]);
                if w[j] <= tol {
                    w[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    w
}

/// Solves the Gram sub-system on `set` by Cholesky; a tiny ridge handles
/// numerically dependent columns.
fn solve_spd_subset(gram: ArrayView2<'_, f64>, atb: ArrayView1<'_, f64>, set: &[usize]) -> Vec<f64> {
    let n = set.len();
    let trace: f64 = set.iter().map(|&j| gram[[j, j]]).sum();
    let mut ridge = 0.0;
    loop {
        let mut a = vec![0.0; n * n];
        for (r, &i) in set.iter().enumerate() {
            for (c, &j) in set.iter().enumerate() {
                a[r * n + c] = gram[[i, j]];
            }
            a[r * n + r] += ridge;
        }
        if let Some(l) = cholesky(&mut a, n) {
            let rhs: Vec<f64> = set.iter().map(|&j| atb[j]).collect();
            return cholesky_solve(l, n, &rhs);
        }
        ridge = if ridge == 0.0 { 1e-12 * trace.max(f64::MIN_POSITIVE) } else { ridge * 100.0 };
    }
}

fn cholesky(a: &mut [f64], n: usize) -> Option<&[f64]> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 1e-14 * a[j * n + j].abs().max(f64::MIN_POSITIVE) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / d;
        }
    }
    Some(a)
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}

fn residual_of(
    grads: ArrayView2<'_, f64>,
    chosen: &[usize],
    weights: &Array1<f64>,
    target: &Array1<f64>,
) -> (Array1<f64>, f64) {
    let mut r = target.clone();
    for (s, &j) in chosen.iter().enumerate() {
        r.scaled_add(-weights[s], &grads.row(j));
    }
    let norm = r.dot(&r).sqrt();
    (r, norm)
}

/// Unselected rows tried per pick in the swap pass.
const SWAP_CANDIDATES: usize = 2;
const SWAP_PASSES: usize = 2;
/// Largest selection refined by the swap pass; every trial refit costs `O(k^3)`.
const SWAP_MAX_PICKS: usize = 16;

/// NNLS weights and residual norm of `target` on the rows in `set`.
fn fit(grads: ArrayView2<'_, f64>, set: &[usize], target: &Array1<f64>) -> (Array1<f64>, f64) {
    let k = set.len();
    let gram = Array2::from_shape_fn((k, k), |(a, b)| grads.row(set[a]).dot(&grads.row(set[b])));
    let atb = Array1::from_shape_fn(k, |a| grads.row(set[a]).dot(target));
    let w = nnls(gram.view(), atb.view());
    let (_, norm) = residual_of(grads, set, &w, target);
    (w, norm)
}

/// Exchanges picks for better-correlated unselected rows while that strictly
/// lowers the residual.
fn swap_pass(
    grads: ArrayView2<'_, f64>,
    target: &Array1<f64>,
    chosen: &mut [usize],
    weights: &mut Array1<f64>,
    norm: &mut f64,
) {
    let n = grads.nrows();
    for _ in 0..SWAP_PASSES {
        let mut improved = false;
        for slot in 0..chosen.len() {
            let (residual, _) = residual_of(grads, chosen, weights, target);
            let corr = grads.dot(&residual);
            let mut outside: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            outside.sort_by(|&a, &b| corr[b].total_cmp(&corr[a]).then(a.cmp(&b)));
            for &j in outside.iter().take(SWAP_CANDIDATES) {
                let mut trial = chosen.to_vec();
                trial[slot] = j;
                let (w, r) = fit(grads, &trial, target);
                if r < *norm * (1.0 - 1e-12) {
                    chosen.copy_from_slice(&trial);
                    *weights = w;
                    *norm = r;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Selects `ceil(fraction * n)` rows of `grads` whose weighted sum matches the full sum.
pub fn gradmatch_select(grads: ArrayView2<'_, f64>, fraction: f64) -> Result<GradMatchSelection> {
    let n = grads.nrows();
    if n == 0 || grads.ncols() == 0 {
        return Err(LearnerError::EmptyGradients);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(LearnerError::InvalidParameter(format!("fraction {fraction} not in (0, 1]")));
    }
    if grads.iter().any(|v| !v.is_finite()) {
        return Err(LearnerError::InvalidParameter("non-finite gradient".into()));
    }
    let k = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let target = grads.sum_axis(Axis(0));

    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut in_set = vec![false; n];
    let mut weights = Array1::zeros(0);
    let mut residual = target.clone();
    let mut residuals = Vec::with_capacity(k);
    let mut gram = Array2::<f64>::zeros((k, k));
    let mut atb = Array1::<f64>::zeros(k);

    for step in 0..k {
        let corr = grads.dot(&residual);
        let pick = (0..n)
            .filter(|&i| !in_set[i])
            .max_by(|&a, &b| corr[a].total_cmp(&corr[b]).then(b.cmp(&a)))
            .expect("fewer picks than rows");
        in_set[pick] = true;
        chosen.push(pick);

        let row = grads.row(pick);
        for (s, &j) in chosen.iter().enumerate() {
            let v = row.dot(&grads.row(j));
            gram[[step, s]] = v;
            gram[[s, step]] = v;
        }
        atb[step] = row.dot(&target);

        let sub_gram = gram.slice(ndarray::s![..=step, ..=step]);
        let refit = nnls(sub_gram, atb.slice(ndarray::s![..=step]));
        let (next_residual, norm) = residual_of(grads, &chosen, &refit, &target);
        match residuals.last() {
            // previous weights padded with a zero stay feasible; keep them if rounding made the refit worse
            Some(&prev) if norm > prev => {
                let mut padded = weights.to_vec();
                padded.push(0.0);
                weights = Array1::from(padded);
                residuals.push(prev);
            }
            _ => {
                weights = refit;
                residual = next_residual;
                residuals.push(norm);
            }
        }
    }
    if k < n && k <= SWAP_MAX_PICKS {
        let mut norm = *residuals.last().expect("k >= 1");
        swap_pass(grads, &target, &mut chosen, &mut weights, &mut norm);
        *residuals.last_mut().expect("k >= 1") = norm;
    }
    Ok(GradMatchSelection { indices: chosen, weights: weights.to_vec(), residuals })
}

/// Runs [`gradmatch_select`] within each class and concatenates the results
/// (indices refer to rows of `grads`).
pub fn gradmatch_select_per_class(
    grads: ArrayView2<'_, f64>,
    labels: &[usize],
    fraction: f64,
) -> Result<GradMatchSelection> {
    if labels.len() != grads.nrows() {
        return Err(LearnerError::Shape(format!("{} labels for {} gradient rows", labels.len(), grads.nrows())));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut merged = GradMatchSelection { indices: Vec::new(), weights: Vec::new(), residuals: Vec::new() };
    for c in 0..classes {
        let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if rows.is_empty() {
            continue;
        }
        let sub = grads.select(Axis(0), &rows);
        let sel = gradmatch_select(sub.view(), fraction)?;
        merged.indices.extend(sel.indices.iter().map(|&i| rows[i]));
        merged.weights.extend(sel.weights);
        merged.residuals.push(*sel.residuals.last().unwrap());
    }
    if merged.indices.is_empty() {
        return Err(LearnerError::EmptyGradients);
    }
    Ok(merged)
}
