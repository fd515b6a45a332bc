// SPDX-License-Identifier: Apache-2.0

//! Uncertainty scores. Larger always means "select first".

use super::{Result, StrategyError};
use crate::learner::ProbMatrix;

/// `-sum p ln p` with `0 ln 0 = 0`.
pub fn entropy_scores(probs: &ProbMatrix) -> Vec<f64> {
    probs
        .view()
        .rows()
        .into_iter()
        .map(|row| row.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum())
        .collect()
}

fn top_two(row: ndarray::ArrayView1<'_, f64>) -> (f64, f64) {
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &p in row {
        if p > first {
            second = first;
            first = p;
        } else if p > second {
            second = p;
        }
    }
    (first, second)
}

/// Negated gap between the two largest probabilities.
pub fn margin_scores(probs: &ProbMatrix) -> Result<Vec<f64>> {
    if probs.num_classes() < 2 {
        return Err(StrategyError::TooFewClasses);
    }
    Ok(probs
        .view()
        .rows()
        .into_iter()
        .map(|row| {
            let (a, b) = top_two(row);
            b - a
        })
        .collect())
}

/// `1 - max p`.
pub fn least_confidence_scores(probs: &ProbMatrix) -> Vec<f64> {
    probs.view().rows().into_iter().map(|row| 1.0 - top_two(row).0).collect()
}

/// Ids of the `b` largest scores; ties go to the lower id.
pub fn top_b(scores: &[f64], ids: &[usize], b: usize) -> Result<Vec<usize>> {
    if scores.len() != ids.len() {
        return Err(StrategyError::Misaligned(format!("{} scores for {} ids", scores.len(), ids.len())));
    }
    if b > scores.len() {
        return Err(StrategyError::BatchTooLarge { b, available: scores.len() });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // + 0.0 folds -0.0 into 0.0 so signed zeros tie
    order.sort_by(|&x, &y| (scores[y] + 0.0).total_cmp(&(scores[x] + 0.0)).then(ids[x].cmp(&ids[y])));
    Ok(order[..b].iter().map(|&k| ids[k]).collect())
}
