// SPDX-License-Identifier: Apache-2.0

use super::facility::{facility_location_greedy_ids, inverse_distance_similarity};
use super::scores::{least_confidence_scores, top_b};
use super::{Result, StrategyError};
use crate::learner::{EmbeddingMatrix, ProbMatrix};

/// Filter-then-optimize: keep the `beta * b` least-confident candidates and
/// pick `b` of them by facility location over embedding similarity
/// `1 / (1 + distance)`.
pub fn fass_select(
    probs: &ProbMatrix,
    embeddings: &EmbeddingMatrix,
    ids: &[usize],
    b: usize,
    beta: usize,
) -> Result<Vec<usize>> {
    let m = ids.len();
    if probs.nrows() != m || embeddings.nrows() != m {
        return Err(StrategyError::Misaligned("fass inputs are not row-aligned".into()));
    }
    if beta == 0 {
        return Err(StrategyError::InvalidParameter("fass beta must be at least 1".into()));
    }
    if b > m {
        return Err(StrategyError::BatchTooLarge { b, available: m });
    }
    let keep = beta.saturating_mul(b).min(m);
    let scores = least_confidence_scores(probs);
    let rows: Vec<usize> = (0..m).collect();
    let mut filtered = top_b(&scores, &rows, keep)?;
    filtered.sort_unstable();
    let sub = embeddings.select(&filtered);
    let sim = inverse_distance_similarity(sub.view());
    let sub_ids: Vec<usize> = filtered.iter().map(|&r| ids[r]).collect();
    facility_location_greedy_ids(sim.view(), &sub_ids, b, &[])
}
