// SPDX-License-Identifier: Apache-2.0

//! Facility location `f(S) = sum_i max_{j in S} sim(i, j)`, maximized by
//! lazy greedy. Marginal gains only shrink as `S` grows, so a stale gain is
//! an upper bound and a popped element whose refreshed gain still beats the
//! next bound is the exact greedy choice.

use super::geometry::euclidean_distances;
use super::{Result, StrategyError};
use ndarray::{Array1, Array2, ArrayView2};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Clone, Copy, Debug)]
struct Entry {
    gain: f64,
    id: usize,
    row: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // larger gain first, then lower id
    fn cmp(&self, other: &Self) -> Ordering {
        (self.gain + 0.0).total_cmp(&(other.gain + 0.0)).then(other.id.cmp(&self.id))
    }
}

fn check_similarity(sim: ArrayView2<'_, f64>) -> Result<()> {
    let (m, n) = sim.dim();
    if m != n {
        return Err(StrategyError::InvalidSimilarity(format!("{m}x{n} is not square")));
    }
    for i in 0..m {
        for j in 0..m {
            let v = sim[[i, j]];
            if !v.is_finite() || v < 0.0 {
                return Err(StrategyError::InvalidSimilarity(format!("entry ({i}, {j}) = {v}")));
            }
            if j > i && (v - sim[[j, i]]).abs() > 1e-12 * v.abs().max(1.0) {
                return Err(StrategyError::InvalidSimilarity(format!("asymmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

fn gain(sim: ArrayView2<'_, f64>, cover: &Array1<f64>, j: usize) -> f64 {
    sim.column(j).iter().zip(cover).map(|(&s, &c)| (s - c).max(0.0)).sum()
}

/// `f(S)` for the given rows.
pub fn facility_location_value(sim: ArrayView2<'_, f64>, set: &[usize]) -> f64 {
    (0..sim.nrows())
        .map(|i| set.iter().map(|&j| sim[[i, j]]).fold(0.0f64, f64::max))
        .sum()
}

/// Greedy maximizer over row indices, ties to the lower index.
pub fn facility_location_greedy(sim: ArrayView2<'_, f64>, b: usize, preselected: &[usize]) -> Result<Vec<usize>> {
    let ids: Vec<usize> = (0..sim.nrows()).collect();
    facility_location_greedy_ids(sim, &ids, b, preselected)
}

/// As [`facility_location_greedy`] but returns `ids[row]` and breaks ties by id.
pub(crate) fn facility_location_greedy_ids(
    sim: ArrayView2<'_, f64>,
    ids: &[usize],
    b: usize,
    preselected: &[usize],
) -> Result<Vec<usize>> {
    check_similarity(sim)?;
    let m = sim.nrows();
    if ids.len() != m {
        return Err(StrategyError::Misaligned(format!("{} ids for {m} rows", ids.len())));
    }
    if let Some(&p) = preselected.iter().find(|&&p| p >= m) {
        return Err(StrategyError::InvalidParameter(format!("preselected row {p} out of range")));
    }
    let mut excluded = vec![false; m];
    for &p in preselected {
        excluded[p] = true;
    }
    let available = m - excluded.iter().filter(|&&e| e).count();
    if b > available {
        return Err(StrategyError::BatchTooLarge { b, available });
    }

    let mut cover = Array1::<f64>::zeros(m);
    for &p in preselected {
        cover.zip_mut_with(&sim.column(p), |c, &s| *c = c.max(s));
    }
    let mut heap: BinaryHeap<Entry> = (0..m)
        .filter(|&j| !excluded[j])
        .map(|j| Entry { gain: gain(sim, &cover, j), id: ids[j], row: j })
        .collect();

    let mut chosen = Vec::with_capacity(b);
    while chosen.len() < b {
        let mut top = heap.pop().expect("enough candidates");
        top.gain = gain(sim, &cover, top.row);
        match heap.peek() {
            Some(next) if *next > top => heap.push(top),
            _ => {
                chosen.push(top.id);
                cover.zip_mut_with(&sim.column(top.row), |c, &s| *c = c.max(s));
            }
        }
    }
    Ok(chosen)
}

/// `1 / (1 + |x_i - x_j|)` over the rows of `x`.
pub fn inverse_distance_similarity(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut d = euclidean_distances(x, x);
    d.mapv_inplace(|v| 1.0 / (1.0 + v));
    // the expanded distance form is symmetric only up to rounding
    let n = d.nrows();
    for i in 0..n {
        d[[i, i]] = 1.0;
        for j in i + 1..n {
            let v = d[[i, j]].min(d[[j, i]]);
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}
