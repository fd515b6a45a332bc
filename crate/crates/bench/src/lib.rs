// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the benchmarks.

use al_lab::learner::{embed, predict_probs, EmbeddingMatrix, ModelState, ProbMatrix};
use al_lab::data::{synth_blobs_with_test, BlobSpec, Dataset};
use al_lab::RngStream;

pub struct SelectionFixture {
    pub probs: ProbMatrix,
    pub embeddings: EmbeddingMatrix,
    pub labeled: EmbeddingMatrix,
    pub val: EmbeddingMatrix,
    pub val_labels: Vec<usize>,
    pub ids: Vec<usize>,
    pub model: ModelState,
}

/// Blobs of `classes` x `per_class` rows in 16 dimensions plus a 16-8 hidden MLP.
pub fn blobs(classes: usize, per_class: usize) -> (Dataset, ModelState) {
    let spec = BlobSpec { classes, per_class, dim: 16, spread: 1.2 };
    let (train, _) = synth_blobs_with_test(spec, 1, &RngStream::new(0, "bench-data")).unwrap();
    let model = ModelState::he_init(&[16, 32, 16, classes], &RngStream::new(0, "bench-init")).unwrap();
    (train, model)
}

/// Candidates are all rows but the first `labeled`; the next 100 double as validation.
pub fn selection_fixture(candidates: usize, labeled: usize) -> SelectionFixture {
    let classes = 4;
    let per_class = (candidates + labeled + 100).div_ceil(classes);
    let (ds, model) = blobs(classes, per_class);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    RngStream::new(1, "bench-order").shuffle(&mut order);
    let (lab, rest) = order.split_at(labeled);
    let (val, cand) = rest.split_at(100);
    let ids = cand[..candidates].to_vec();
    SelectionFixture {
        probs: predict_probs(&model, &ds, &ids).unwrap(),
        embeddings: embed(&model, &ds, &ids).unwrap(),
        labeled: embed(&model, &ds, lab).unwrap(),
        val: embed(&model, &ds, val).unwrap(),
        val_labels: ds.gather_labels(val),
        ids,
        model,
    }
}
