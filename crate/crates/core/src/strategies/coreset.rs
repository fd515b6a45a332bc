// SPDX-License-Identifier: Apache-2.0

use super::geometry::{squared_distances, squared_distances_to};
use super::{Result, StrategyError};
use crate::learner::EmbeddingMatrix;
use ndarray::{Array1, ArrayView2, Axis};

/// Greedy farthest-first k-center: centers start at the labeled embeddings
/// and each step adds the candidate farthest from its nearest center.
/// Ties (including the all-infinite start) go to the lowest id.
pub fn coreset_select(
    unlabeled: &EmbeddingMatrix,
    labeled: Option<&EmbeddingMatrix>,
    ids: &[usize],
    b: usize,
) -> Result<Vec<usize>> {
    let rows = unlabeled.view();
    let m = rows.nrows();
    if ids.len() != m {
        return Err(StrategyError::Misaligned(format!("{} ids for {m} embeddings", ids.len())));
    }
    if b > m {
        return Err(StrategyError::BatchTooLarge { b, available: m });
    }
    let mut nearest: Array1<f64> = match labeled {
        Some(l) if l.nrows() > 0 => {
            if l.dim() != unlabeled.dim() {
                return Err(StrategyError::Misaligned("labeled and unlabeled embedding widths differ".into()));
            }
            squared_distances(rows, l.view()).map_axis(Axis(1), |r| r.fold(f64::INFINITY, |a, &b| a.min(b)))
        }
        _ => Array1::from_elem(m, f64::INFINITY),
    };
    farthest_first(rows, ids, &mut nearest, vec![false; m], b)
}

pub(crate) fn farthest_first(
    rows: ArrayView2<'_, f64>,
    ids: &[usize],
    nearest: &mut Array1<f64>,
    mut taken: Vec<bool>,
    b: usize,
) -> Result<Vec<usize>> {
    let mut chosen = Vec::with_capacity(b);
    for _ in 0..b {
        let mut best: Option<usize> = None;
        for k in 0..rows.nrows() {
            if taken[k] {
                continue;
            }
            best = match best {
                None => Some(k),
                Some(j) if nearest[k] > nearest[j] || (nearest[k] == nearest[j] && ids[k] < ids[j]) => Some(k),
                keep => keep,
            };
        }
        let pick = best.expect("b <= m");
        taken[pick] = true;
        chosen.push(ids[pick]);
        let d = squared_distances_to(rows, rows.row(pick));
        nearest.zip_mut_with(&d, |a, &b| *a = a.min(b));
    }
    Ok(chosen)
}

/// `max_i min_{c in centers} |x_i - c|` over all rows of `points`.
pub fn k_center_cost(points: ArrayView2<'_, f64>, centers: ArrayView2<'_, f64>) -> f64 {
    if centers.nrows() == 0 {
        return f64::INFINITY;
    }
    squared_distances(points, centers)
        .map_axis(Axis(1), |r| r.fold(f64::INFINITY, |a, &b| a.min(b)))
        .fold(0.0f64, |a, &b| a.max(b))
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn emb(a: ndarray::Array2<f64>) -> EmbeddingMatrix {
        EmbeddingMatrix::new(a).unwrap()
    }

    #[test]
    fn picks_farthest_from_centers() {
        let cand = emb(array![[0.0], [1.0], [10.0]]);
        let centers = emb(array![[0.0]]);
        assert_eq!(coreset_select(&cand, Some(&centers), &[0, 1, 2], 1).unwrap(), vec![2]);
        assert_eq!(coreset_select(&cand, Some(&centers), &[0, 1, 2], 2).unwrap(), vec![2, 1]);
    }

    #[test]
    fn no_centers_starts_at_lowest_id() {
        let cand = emb(array![[5.0], [1.0], [10.0]]);
        assert_eq!(coreset_select(&cand, None, &[8, 3, 6], 1).unwrap(), vec![3]);
    }

    #[test]
    fn cost_helper() {
        let pts = array![[0.0], [1.0], [10.0]];
        assert_eq!(k_center_cost(pts.view(), array![[0.0], [10.0]].view()), 1.0);
    }
}
