// SPDX-License-Identifier: Apache-2.0

use al_lab::data::{
    apply_transform, cap_per_class, idx_dataset, init_pool, make_redundant, parse_idx, read_csv_dataset,
    serialize_idx, synth_blobs, write_csv_dataset, BlobSpec, Dataset, IdxTensor, ImageShape, RedundancyMode,
    RedundancySpec, Transform,
};
use al_lab::RngStream;
use proptest::prelude::*;
use std::collections::HashMap;

fn blobs(classes: usize, per_class: usize, seed: u64) -> Dataset {
    synth_blobs(BlobSpec { classes, per_class, dim: 3, spread: 1.0 }, &RngStream::new(seed, "data-it")).unwrap()
}

fn row_key(ds: &Dataset, i: usize) -> Vec<u64> {
    ds.row(i).iter().map(|v| v.to_bits()).collect()
}

proptest! {
    #[test]
    fn idx_round_trip(dims in prop::collection::vec(1usize..5, 1..=3), fill in any::<u8>()) {
        let len: usize = dims.iter().product();
        let data: Vec<u8> = (0..len).map(|k| (k as u8).wrapping_mul(31).wrapping_add(fill)).collect();
        let t = IdxTensor::new(dims, data).unwrap();
        let bytes = serialize_idx(&t);
        prop_assert_eq!(parse_idx(&bytes).unwrap(), t);
    }

    #[test]
    fn idx_rejects_truncation(dims in prop::collection::vec(1usize..5, 1..=3), cut in 1usize..4) {
        let len: usize = dims.iter().product();
        let bytes = serialize_idx(&IdxTensor::new(dims, vec![7; len]).unwrap());
        let cut = cut.min(bytes.len());
        prop_assert!(parse_idx(&bytes[..bytes.len() - cut]).is_err());
    }

    #[test]
    fn pool_partitions_indices(n_per in 5usize..30, seed_size in 1usize..8, val in 0.0f64..0.3, seed in 0u64..50) {
        let ds = blobs(2, n_per, 0);
        let pool = init_pool(&ds, seed_size, val, &RngStream::new(seed, "pool")).unwrap();
        pool.check(ds.len()).unwrap();
        prop_assert_eq!(pool.labeled.len(), seed_size);
        prop_assert_eq!(pool.labeled.len() + pool.unlabeled.len() + pool.validation.len(), ds.len());
    }

    #[test]
    fn cap_is_idempotent(cap in 1usize..15, seed in 0u64..50) {
        let ds = blobs(3, 12, 1);
        let pool = init_pool(&ds, 4, 0.0, &RngStream::new(seed, "pool")).unwrap();
        let rng = RngStream::new(seed, "cap");
        let once = cap_per_class(&ds, &pool, cap, &rng).unwrap();
        let twice = cap_per_class(&ds, &once, cap, &rng).unwrap();
        prop_assert_eq!(&once, &twice);
        let mut counts = [0; 3];
        for &i in &once.unlabeled {
            counts[ds.labels()[i]] += 1;
        }
        prop_assert!(counts.iter().all(|&c| c <= cap));
        prop_assert!(once.unlabeled.iter().all(|i| pool.unlabeled.contains(i)));
    }

    #[test]
    fn duplicate_redundancy_counts(factor in 1usize..5, base_per_class in 1usize..4, unique_per_class in 1usize..5, seed in 0u64..20) {
        let per_class = unique_per_class + factor * base_per_class;
        let ds = blobs(2, per_class, 2);
        let spec = RedundancySpec { n_unique: 2 * unique_per_class, factor, mode: RedundancyMode::Duplicate };
        let out = make_redundant(&ds, &spec, &RngStream::new(seed, "red")).unwrap();
        prop_assert_eq!(out.len(), ds.len());
        prop_assert_eq!(out.class_counts(), ds.class_counts());
        let mut multiplicity: HashMap<Vec<u64>, usize> = HashMap::new();
        for i in 0..out.len() {
            *multiplicity.entry(row_key(&out, i)).or_default() += 1;
        }
        let singles = multiplicity.values().filter(|&&m| m == 1).count();
        let repeated = multiplicity.values().filter(|&&m| m == factor).count();
        if factor == 1 {
            prop_assert_eq!(singles, ds.len());
        } else {
            prop_assert_eq!(singles, spec.n_unique);
            prop_assert_eq!(repeated, 2 * base_per_class);
        }
    }
}

#[test]
fn augment_mode_keeps_class_ratios_and_perturbs_copies() {
    let ds = blobs(2, 20, 3);
    let spec = RedundancySpec { n_unique: 8, factor: 4, mode: RedundancyMode::Augment };
    let out = make_redundant(&ds, &spec, &RngStream::new(0, "red")).unwrap();
    assert_eq!(out.class_counts(), ds.class_counts());
    let distinct: std::collections::HashSet<_> = (0..out.len()).map(|i| row_key(&out, i)).collect();
    assert_eq!(distinct.len(), out.len());
}

#[test]
fn redundancy_rejects_indivisible_remainder() {
    let ds = blobs(2, 10, 0);
    let spec = RedundancySpec { n_unique: 7, factor: 3, mode: RedundancyMode::Duplicate };
    assert!(make_redundant(&ds, &spec, &RngStream::new(0, "red")).is_err());
}

#[test]
fn identity_transform_is_noop_and_shapes_hold() {
    let shape = ImageShape { height: 5, width: 6, channels: 2 };
    let row: Vec<f64> = (0..shape.len()).map(|k| k as f64 * 0.25 - 3.0).collect();
    let fill = vec![-1.0, -2.0];
    assert_eq!(apply_transform(&row, shape, &fill, Transform::IDENTITY), row);
    let centered = Transform { flip: false, crop: Some((4, 4)) };
    assert_eq!(apply_transform(&row, shape, &fill, centered), row);
    let flip = Transform { flip: true, crop: None };
    let twice = apply_transform(&apply_transform(&row, shape, &fill, flip), shape, &fill, flip);
    assert_eq!(twice, row);
    for dy in 0..=8 {
        for dx in 0..=8 {
            let t = Transform { flip: dy % 2 == 0, crop: Some((dy, dx)) };
            assert_eq!(apply_transform(&row, shape, &fill, t).len(), shape.len());
        }
    }
}

#[test]
fn crop_shifts_pixels_and_fills_border() {
    let shape = ImageShape { height: 3, width: 3, channels: 1 };
    let row: Vec<f64> = (1..=9).map(f64::from).collect();
    // window offset (5, 4) moves the image up by one row
    let out = apply_transform(&row, shape, &[0.0], Transform { flip: false, crop: Some((5, 4)) });
    assert_eq!(out, vec![4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 0.0, 0.0, 0.0]);
}

#[test]
fn idx_dataset_normalizes_per_channel() {
    let images = IdxTensor::new(vec![2, 2, 2], vec![0, 255, 0, 255, 255, 255, 0, 0]).unwrap();
    let labels = IdxTensor::new(vec![2], vec![0, 1]).unwrap();
    let ds = idx_dataset(&images, &labels, None, None).unwrap();
    assert_eq!(ds.image_shape(), Some(ImageShape { height: 2, width: 2, channels: 1 }));
    let (mean, std) = ds.normalization()[0];
    assert!((mean - 0.5).abs() < 1e-12 && (std - 0.5).abs() < 1e-12);
    assert_eq!(ds.row(0).to_vec(), vec![-1.0, 1.0, -1.0, 1.0]);
}

#[test]
fn blobs_are_deterministic_per_seed() {
    assert_eq!(blobs(3, 10, 5), blobs(3, 10, 5));
    assert_ne!(blobs(3, 10, 5), blobs(3, 10, 6));
}

#[test]
fn csv_dataset_round_trip() {
    let ds = blobs(3, 4, 9);
    let mut buf = Vec::new();
    write_csv_dataset(&ds, &mut buf).unwrap();
    let back = read_csv_dataset(buf.as_slice(), Some(3)).unwrap();
    assert_eq!(back.labels(), ds.labels());
    assert_eq!(back.features(), ds.features());
}
