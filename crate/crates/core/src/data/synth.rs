// SPDX-License-Identifier: Apache-2.0

use super::{DataError, Dataset, Result};
use crate::rng::RngStream;
use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

/// Isotropic Gaussian blobs, one per class.
///
/// Class means are drawn once from a standard normal in `dim` dimensions;
/// each instance is its class mean plus `spread`-scaled standard normal noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlobSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub spread: f64,
}

impl BlobSpec {
    fn check(&self) -> Result<()> {
        if self.classes < 2 || self.per_class < 1 || self.dim < 1 {
            return Err(DataError::InvalidParameter(format!(
                "blobs need classes >= 2, per_class >= 1, dim >= 1 (got {}, {}, {})",
                self.classes, self.per_class, self.dim
            )));
        }
        if !(self.spread >= 0.0 && self.spread.is_finite()) {
            return Err(DataError::InvalidParameter(format!("spread {} must be >= 0", self.spread)));
        }
        Ok(())
    }

    fn means(&self, rng: &RngStream) -> Array2<f64> {
        let mut r = rng.derive("means");
        Array2::from_shape_simple_fn((self.classes, self.dim), || StandardNormal.sample(&mut r))
    }

    fn sample(&self, means: &Array2<f64>, per_class: usize, mut r: RngStream) -> Result<Dataset> {
        let n = self.classes * per_class;
        let mut features = Array2::zeros((n, self.dim));
        let mut labels = Vec::with_capacity(n);
        for c in 0..self.classes {
            for k in 0..per_class {
                let mut row = features.row_mut(c * per_class + k);
                for (j, v) in row.iter_mut().enumerate() {
                    let z: f64 = StandardNormal.sample(&mut r);
                    *v = means[[c, j]] + self.spread * z;
                }
                labels.push(c);
            }
        }
        Ok(Dataset::new(features, labels, self.classes)?.with_spread(self.spread))
    }
}

/// Class-major blobs dataset, deterministic in `(rng seed, rng label, spec)`.
pub fn synth_blobs(spec: BlobSpec, rng: &RngStream) -> Result<Dataset> {
    spec.check()?;
    let means = spec.means(rng);
    spec.sample(&means, spec.per_class, rng.derive("points"))
}

/// Training blobs as in [`synth_blobs`] plus a held-out set drawn around the same means.
pub fn synth_blobs_with_test(
    spec: BlobSpec,
    test_per_class: usize,
    rng: &RngStream,
) -> Result<(Dataset, Dataset)> {
    spec.check()?;
    let means = spec.means(rng);
    let train = spec.sample(&means, spec.per_class, rng.derive("points"))?;
    let test = spec.sample(&means, test_per_class.max(1), rng.derive("test"))?;
    Ok((train, test))
}
