// SPDX-License-Identifier: Apache-2.0

use super::{augment_or_jitter, jitter_sigma, DataError, Dataset, Result};
use crate::rng::RngStream;
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedundancyMode {
    /// Exact copies.
    Duplicate,
    /// One original plus `factor - 1` augmented near-copies.
    Augment,
}

/// Keep `n_unique` instances once and fill the rest of the dataset with a
/// base set repeated `factor` times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RedundancySpec {
    pub n_unique: usize,
    pub factor: usize,
    pub mode: RedundancyMode,
}

impl RedundancySpec {
    /// Size of the repeated base set for a dataset of `n` instances.
    pub fn base_size(&self, n: usize) -> Result<usize> {
        if self.factor == 0 {
            return Err(DataError::Redundancy("factor must be at least 1".into()));
        }
        if self.n_unique >= n {
            return Err(DataError::Redundancy(format!(
                "n_unique {} must be below dataset size {n}",
                self.n_unique
            )));
        }
        let rest = n - self.n_unique;
        if !rest.is_multiple_of(self.factor) {
            return Err(DataError::Redundancy(format!(
                "{rest} non-unique instances are not divisible by factor {}",
                self.factor
            )));
        }
        Ok(rest / self.factor)
    }
}

/// Per-class base-set sizes. Each class gets `n_c - factor * base_c` unique
/// instances, so the output keeps every class count exactly.
fn allocate_base(counts: &[usize], n: usize, base: usize, factor: usize) -> Result<Vec<usize>> {
    let caps: Vec<usize> = counts.iter().map(|&c| c / factor).collect();
    let ideal: Vec<f64> = counts.iter().map(|&c| base as f64 * c as f64 / n as f64).collect();
    let mut alloc: Vec<usize> = ideal.iter().zip(&caps).map(|(&x, &cap)| (x.floor() as usize).min(cap)).collect();
    let mut missing = base
        .checked_sub(alloc.iter().sum())
        .ok_or_else(|| DataError::Redundancy("base allocation overflow".into()))?;
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - alloc[a] as f64;
        let fb = ideal[b] - alloc[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    while missing > 0 {
        let mut progressed = false;
        for &c in &order {
            if missing == 0 {
                break;
            }
            if alloc[c] < caps[c] {
                alloc[c] += 1;
                missing -= 1;
                progressed = true;
            }
        }
        if !progressed {
            return Err(DataError::Redundancy(format!(
                "cannot place a base set of {base} with factor {factor} while preserving class counts"
            )));
        }
    }
    Ok(alloc)
}

/// Source index of every output row of [`make_redundant`]: unique rows
/// first (ascending), then `factor` passes over the base set (ascending).
pub fn redundant_layout(ds: &Dataset, spec: &RedundancySpec, rng: &RngStream) -> Result<Vec<usize>> {
    let n = ds.len();
    let base = spec.base_size(n)?;
    if spec.factor == 1 {
        return Ok((0..n).collect());
    }
    let counts = ds.class_counts();
    let base_per_class = allocate_base(&counts, n, base, spec.factor)?;

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.num_classes()];
    for (i, &l) in ds.labels().iter().enumerate() {
        by_class[l].push(i);
    }
    let mut r = rng.derive("redundancy");
    let mut unique = Vec::with_capacity(spec.n_unique);
    let mut base_set = Vec::with_capacity(base);
    for (c, members) in by_class.iter_mut().enumerate() {
        r.shuffle(members);
        let n_unique_c = counts[c] - spec.factor * base_per_class[c];
        unique.extend_from_slice(&members[..n_unique_c]);
        base_set.extend_from_slice(&members[n_unique_c..n_unique_c + base_per_class[c]]);
    }
    unique.sort_unstable();
    base_set.sort_unstable();

    let mut layout = unique;
    for _ in 0..spec.factor {
        layout.extend_from_slice(&base_set);
    }
    debug_assert_eq!(layout.len(), n);
    Ok(layout)
}

/// Replaces part of `ds` with repeated copies of a base set, keeping size
/// and class counts. In augment mode, image rows get flip/crop copies and
/// flat rows get isotropic Gaussian jitter of `0.05 * spread`.
pub fn make_redundant(ds: &Dataset, spec: &RedundancySpec, rng: &RngStream) -> Result<Dataset> {
    let layout = redundant_layout(ds, spec, rng)?;
    if spec.factor == 1 {
        return Ok(ds.clone());
    }
    let mut features: Array2<f64> = ds.features().select(Axis(0), &layout);
    let labels = ds.gather_labels(&layout);

    if spec.mode == RedundancyMode::Augment {
        let base = spec.base_size(ds.len())?;
        let first_copy = spec.n_unique + base;
        let mut r = rng.derive("redundancy-augment");
        let sigma = jitter_sigma(ds);
        for row in first_copy..layout.len() {
            let fresh = augment_or_jitter(ds, ds.row(layout[row]), sigma, &mut r);
            features.row_mut(row).assign(&fresh);
        }
    }
    Ok(Dataset::from_parts_unchecked(ds, features, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_blobs, BlobSpec};
    use std::collections::HashMap;

    fn blobs(classes: usize, per_class: usize) -> Dataset {
        synth_blobs(BlobSpec { classes, per_class, dim: 3, spread: 1.0 }, &RngStream::new(0, "split")).unwrap()
    }

    fn dup(n_unique: usize, factor: usize) -> RedundancySpec {
        RedundancySpec { n_unique, factor, mode: RedundancyMode::Duplicate }
    }

    #[test]
    fn full_scale_arithmetic() {
        assert_eq!(dup(5000, 5).base_size(50_000).unwrap(), 9000);
    }

    #[test]
    fn small_example_each_base_twice() {
        let ds = blobs(2, 5);
        let layout = redundant_layout(&ds, &dup(2, 2), &RngStream::new(1, "split")).unwrap();
        assert_eq!(layout.len(), 10);
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for &i in &layout {
            *counts.entry(i).or_default() += 1;
        }
        assert_eq!(counts.values().filter(|&&c| c == 1).count(), 2);
        assert_eq!(counts.values().filter(|&&c| c == 2).count(), 4);
        let out = make_redundant(&ds, &dup(2, 2), &RngStream::new(1, "split")).unwrap();
        assert_eq!(out.class_counts(), ds.class_counts());
    }

    #[test]
    fn factor_one_is_identity() {
        let ds = blobs(3, 4);
        assert_eq!(make_redundant(&ds, &dup(3, 1), &RngStream::new(0, "r")).unwrap(), ds);
    }

    #[test]
    fn rejects_bad_specs() {
        let ds = blobs(2, 5);
        let rng = RngStream::new(0, "r");
        assert!(make_redundant(&ds, &dup(3, 2), &rng).is_err()); // 7 not divisible by 2
        assert!(make_redundant(&ds, &dup(10, 2), &rng).is_err());
    }

    #[test]
    fn augment_mode_jitters_flat_copies() {
        let ds = blobs(2, 10);
        let spec = RedundancySpec { n_unique: 4, factor: 4, mode: RedundancyMode::Augment };
        let rng = RngStream::new(2, "r");
        let layout = redundant_layout(&ds, &spec, &rng).unwrap();
        let out = make_redundant(&ds, &spec, &rng).unwrap();
        // originals of the base set are exact, later copies are perturbed but close
        for row in 0..8 {
            assert_eq!(out.row(row), ds.row(layout[row]));
        }
        for row in 8..20 {
            let diff = &out.row(row) - &ds.row(layout[row]);
            let norm = diff.dot(&diff).sqrt();
            assert!(norm > 0.0 && norm < 0.5, "jitter norm {norm}");
        }
    }

    #[test]
    fn uneven_classes_keep_counts() {
        let features = Array2::from_shape_fn((30, 2), |(i, j)| (i * 2 + j) as f64);
        let labels: Vec<usize> = (0..30).map(|i| if i < 7 { 0 } else if i < 20 { 1 } else { 2 }).collect();
        let ds = Dataset::new(features, labels, 3).unwrap();
        for (n_unique, factor) in [(10, 2), (6, 3), (10, 5), (20, 10)] {
            let out = make_redundant(&ds, &dup(n_unique, factor), &RngStream::new(5, "r")).unwrap();
            assert_eq!(out.class_counts(), ds.class_counts(), "n_unique {n_unique} factor {factor}");
        }
    }
}
