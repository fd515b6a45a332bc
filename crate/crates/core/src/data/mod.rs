// SPDX-License-Identifier: Apache-2.0

//! Datasets, ingestion, augmentation and the pool-manipulation protocols
//! (redundancy injection, per-class caps, seed/validation splits).

mod augment;
mod csv_io;
mod idx;
mod pool;
mod redundancy;
mod synth;

pub use augment::{
    apply_transform, augment, augment_or_jitter, draw_transform, jitter, jitter_sigma, Transform, CROP_PAD,
};
pub use csv_io::{read_csv_dataset, write_csv_dataset};
pub use idx::{idx_dataset, parse_idx, serialize_idx, IdxTensor};
pub use pool::{cap_per_class, init_pool, PoolState};
pub use redundancy::{make_redundant, RedundancyMode, RedundancySpec};
pub use synth::{synth_blobs, synth_blobs_with_test, BlobSpec};

use ndarray::{Array2, ArrayView1};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("bad IDX magic: expected two zero bytes, got {0:02x} {1:02x}")]
    BadMagic(u8, u8),
    #[error("unsupported IDX type code 0x{0:02x} (only 0x08 unsigned byte is supported)")]
    UnsupportedType(u8),
    #[error("IDX dimension count is zero")]
    ZeroDimensions,
    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: usize, actual: usize },
    #[error("{0} trailing bytes after IDX payload")]
    TrailingBytes(usize),
    #[error("dataset is empty")]
    Empty,
    #[error("label {label} at row {row} is outside [0, {num_classes})")]
    InvalidLabel { row: usize, label: usize, num_classes: usize },
    #[error("non-finite feature at row {row}")]
    NonFinite { row: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("redundancy: {0}")]
    Redundancy(String),
    #[error("pool sizes exceed dataset: need {needed}, have {available}")]
    PoolTooSmall { needed: usize, available: usize },
    #[error("index {index} is not in the unlabeled pool")]
    NotUnlabeled { index: usize },
    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// Height, width and channel count of image-shaped rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ImageShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl ImageShape {
    pub fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-channel `(mean, std)` used to standardize pixel values.
pub type Normalization = Vec<(f64, f64)>;

/// Feature rows plus integer labels.
///
/// Rows are stored already normalized. Image rows are laid out `(y, x, c)`
/// row-major. Datasets without an [`ImageShape`] are flat feature vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    image: Option<ImageShape>,
    normalization: Normalization,
    spread: Option<f64>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let ds = Self {
            features,
            labels,
            num_classes,
            image: None,
            normalization: Vec::new(),
            spread: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn with_image(mut self, shape: ImageShape, normalization: Normalization) -> Result<Self> {
        if shape.len() != self.dim() {
            return Err(DataError::Shape(format!(
                "image {}x{}x{} does not match row length {}",
                shape.height,
                shape.width,
                shape.channels,
                self.dim()
            )));
        }
        if !normalization.is_empty() && normalization.len() != shape.channels {
            return Err(DataError::Shape(format!(
                "{} normalization pairs for {} channels",
                normalization.len(),
                shape.channels
            )));
        }
        self.image = Some(shape);
        self.normalization = normalization;
        Ok(self)
    }

    pub(crate) fn with_spread(mut self, spread: f64) -> Self {
        self.spread = Some(spread);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.features.nrows();
        if n == 0 || self.features.ncols() == 0 {
            return Err(DataError::Empty);
        }
        if self.labels.len() != n {
            return Err(DataError::Shape(format!("{} labels for {n} rows", self.labels.len())));
        }
        if self.num_classes == 0 {
            return Err(DataError::InvalidParameter("num_classes must be positive".into()));
        }
        for (row, &label) in self.labels.iter().enumerate() {
            if label >= self.num_classes {
                return Err(DataError::InvalidLabel { row, label, num_classes: self.num_classes });
            }
        }
        for (row, r) in self.features.rows().into_iter().enumerate() {
            if r.iter().any(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { row });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn image_shape(&self) -> Option<ImageShape> {
        self.image
    }

    pub fn normalization(&self) -> &[(f64, f64)] {
        &self.normalization
    }

    /// Standard deviation of the generating Gaussians, for synthetic data.
    pub fn spread(&self) -> Option<f64> {
        self.spread
    }

    /// Rows `indices` stacked into a new matrix.
    pub fn gather(&self, indices: &[usize]) -> Array2<f64> {
        self.features.select(ndarray::Axis(0), indices)
    }

    pub fn gather_labels(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.labels[i]).collect()
    }

    /// Number of instances per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Pixel value 0 expressed in normalized units, per channel.
    pub fn zero_fill(&self) -> Vec<f64> {
        match self.image {
            Some(shape) if self.normalization.is_empty() => vec![0.0; shape.channels],
            Some(_) => self.normalization.iter().map(|&(m, s)| -m / s).collect(),
            None => Vec::new(),
        }
    }

    pub(crate) fn from_parts_unchecked(
        template: &Dataset,
        features: Array2<f64>,
        labels: Vec<usize>,
    ) -> Self {
        Self {
            features,
            labels,
            num_classes: template.num_classes,
            image: template.image,
            normalization: template.normalization.clone(),
            spread: template.spread,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_bad_label() {
        let err = Dataset::new(array![[0.0], [1.0]], vec![0, 2], 2).unwrap_err();
        assert!(matches!(err, DataError::InvalidLabel { row: 1, label: 2, .. }));
    }

    #[test]
    fn rejects_non_finite() {
        let err = Dataset::new(array![[0.0], [f64::NAN]], vec![0, 1], 2).unwrap_err();
        assert_eq!(err, DataError::NonFinite { row: 1 });
    }

    #[test]
    fn rejects_image_shape_mismatch() {
        let ds = Dataset::new(array![[0.0, 1.0, 2.0]], vec![0], 1).unwrap();
        let shape = ImageShape { height: 2, width: 2, channels: 1 };
        assert!(ds.with_image(shape, vec![]).is_err());
    }

    #[test]
    fn zero_fill_tracks_normalization() {
        let ds = Dataset::new(array![[0.0, 1.0]], vec![0], 1)
            .unwrap()
            .with_image(ImageShape { height: 1, width: 1, channels: 2 }, vec![(0.5, 0.25), (0.0, 1.0)])
            .unwrap();
        assert_eq!(ds.zero_fill(), vec![-2.0, 0.0]);
    }
}
