// SPDX-License-Identifier: Apache-2.0

use al_lab::learner::{gradmatch_select, train, OptimizerConfig, StoppingRule, TrainConfig};
use al_lab::strategies::{select, GlisterContext, SelectionRequest, Strategy};
use al_lab::RngStream;
use al_lab_bench::{blobs, selection_fixture};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn selection(c: &mut Criterion) {
    let fx = selection_fixture(2000, 200);
    let last = fx.model.weights().len() - 1;
    let mut group = c.benchmark_group("select_b100_of_2000");
    group.sample_size(10);
    for s in Strategy::ALL {
        group.bench_with_input(BenchmarkId::from_parameter(s), &s, |bench, &s| {
            bench.iter(|| {
                let req = SelectionRequest {
                    probs: &fx.probs,
                    embeddings: &fx.embeddings,
                    candidate_ids: &fx.ids,
                    batch_size: 100,
                    rng: RngStream::new(3, "bench-select"),
                    labeled_embeddings: Some(&fx.labeled),
                    fass_beta: 5,
                    glister: Some(GlisterContext {
                        weight: fx.model.weights()[last].view(),
                        bias: fx.model.biases()[last].view(),
                        val_embeddings: &fx.val,
                        val_labels: &fx.val_labels,
                        eta: 0.01,
                    }),
                };
                black_box(select(s, &req).unwrap())
            })
        });
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let (ds, model) = blobs(4, 250);
    let labeled: Vec<usize> = (0..ds.len()).collect();
    let cfg = TrainConfig {
        optimizer: OptimizerConfig { lr: 0.01, ..OptimizerConfig::sgd() },
        stop: StoppingRule { target_train_acc: 1.1, max_epochs: 5, plateau_epochs: 100 },
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("train_5_epochs_1000");
    group.sample_size(10);
    group.bench_function("full", |b| {
        b.iter(|| black_box(train(model.clone(), &ds, &labeled, &cfg, 0, &RngStream::new(0, "bench-train")).unwrap()))
    });
    let mut subset = cfg.clone();
    subset.subset.enabled = true;
    subset.subset.fraction = 0.3;
    group.bench_function("gradmatch_0.3", |b| {
        b.iter(|| black_box(train(model.clone(), &ds, &labeled, &subset, 1, &RngStream::new(0, "bench-train")).unwrap()))
    });
    group.finish();

    let grads = ndarray::Array2::from_shape_fn((1000, 64), |(i, j)| ((i * 31 + j * 17) % 97) as f64 / 97.0 - 0.5);
    c.bench_function("gradmatch_select_300_of_1000", |b| b.iter(|| black_box(gradmatch_select(grads.view(), 0.3).unwrap())));
}

criterion_group!(benches, selection, training);
criterion_main!(benches);
