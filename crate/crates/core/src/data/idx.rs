// SPDX-License-Identifier: Apache-2.0

//! IDX container: `00 00 <type> <ndims>`, then `ndims` big-endian u32
//! dimensions, then the row-major payload.

use super::{DataError, Dataset, ImageShape, Normalization, Result};
use ndarray::Array2;

const TYPE_U8: u8 = 0x08;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxTensor {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxTensor {
    pub fn new(dims: Vec<usize>, data: Vec<u8>) -> Result<Self> {
        if dims.is_empty() {
            return Err(DataError::ZeroDimensions);
        }
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(DataError::Shape(format!(
                "dims {dims:?} need {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxTensor> {
    if bytes.len() < 4 {
        return Err(DataError::TruncatedPayload { expected: 4, actual: bytes.len() });
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(DataError::BadMagic(bytes[0], bytes[1]));
    }
    if bytes[2] != TYPE_U8 {
        return Err(DataError::UnsupportedType(bytes[2]));
    }
    let ndims = bytes[3] as usize;
    if ndims == 0 {
        return Err(DataError::ZeroDimensions);
    }
    let header = 4 + 4 * ndims;
    if bytes.len() < header {
        return Err(DataError::TruncatedPayload { expected: header, actual: bytes.len() });
    }
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let expected = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| DataError::Shape(format!("dims {dims:?} overflow")))?;
    let payload = &bytes[header..];
    if payload.len() < expected {
        return Err(DataError::TruncatedPayload { expected, actual: payload.len() });
    }
    if payload.len() > expected {
        return Err(DataError::TrailingBytes(payload.len() - expected));
    }
    Ok(IdxTensor { dims, data: payload.to_vec() })
}

pub fn serialize_idx(tensor: &IdxTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 * tensor.dims.len() + tensor.data.len());
    out.extend_from_slice(&[0, 0, TYPE_U8, tensor.dims.len() as u8]);
    for &d in &tensor.dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&tensor.data);
    out
}

/// Builds a dataset from an image tensor `(n, h, w[, c])` and a label vector `(n)`.
///
/// Pixels are scaled to `[0, 1]` and standardized per channel. When
/// `normalization` is `None` the statistics are computed from these images,
/// which is what a training split wants; pass the training statistics for
/// the test split.
pub fn idx_dataset(
    images: &IdxTensor,
    labels: &IdxTensor,
    num_classes: Option<usize>,
    normalization: Option<Normalization>,
) -> Result<Dataset> {
    let (n, shape) = match images.dims.as_slice() {
        [n, h, w] => (*n, ImageShape { height: *h, width: *w, channels: 1 }),
        [n, h, w, c] => (*n, ImageShape { height: *h, width: *w, channels: *c }),
        other => return Err(DataError::Shape(format!("image tensor dims {other:?}"))),
    };
    if labels.dims != [n] {
        return Err(DataError::Shape(format!("label dims {:?} for {n} images", labels.dims)));
    }
    let labels: Vec<usize> = labels.data.iter().map(|&l| l as usize).collect();
    let num_classes = num_classes.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));

    let c = shape.channels;
    let stats = match normalization {
        Some(stats) => stats,
        None => {
            let mut sum = vec![0.0; c];
            let mut sq = vec![0.0; c];
            for (k, &p) in images.data.iter().enumerate() {
                let v = p as f64 / 255.0;
                sum[k % c] += v;
                sq[k % c] += v * v;
            }
            let count = (images.data.len() / c) as f64;
            (0..c)
                .map(|ch| {
                    let mean = sum[ch] / count;
                    let var = (sq[ch] / count - mean * mean).max(0.0);
                    let std = if var > 0.0 { var.sqrt() } else { 1.0 };
                    (mean, std)
                })
                .collect()
        }
    };
    let features = Array2::from_shape_fn((n, shape.len()), |(i, j)| {
        let (mean, std) = stats[j % c];
        (images.data[i * shape.len() + j] as f64 / 255.0 - mean) / std
    });
    Dataset::new(features, labels, num_classes)?.with_image(shape, stats)
}
