// SPDX-License-Identifier: Apache-2.0

//! Random horizontal flip and padded random crop.
//!
//! Rows are stored normalized, and both transforms only move pixels or fill
//! with pixel value zero. Filling with the normalized image of zero is
//! therefore identical to padding raw pixels and normalizing afterwards.

use super::{Dataset, ImageShape};
use crate::rng::RngStream;
use ndarray::{Array1, ArrayView1, Axis};
use rand_distr::{Distribution, StandardNormal};

/// Zero padding on each side before cropping.
pub const CROP_PAD: usize = 4;
const P_FLIP: f64 = 0.5;
const P_CROP: f64 = 0.5;

/// One draw of the augmentation policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transform {
    pub flip: bool,
    /// Window offset `(dy, dx)` into the padded image, each in `0..=2 * CROP_PAD`.
    pub crop: Option<(usize, usize)>,
}

impl Transform {
    pub const IDENTITY: Transform = Transform { flip: false, crop: None };
}

pub fn draw_transform(rng: &mut RngStream) -> Transform {
    let flip = rng.uniform() < P_FLIP;
    let crop = if rng.uniform() < P_CROP {
        let span = 2 * CROP_PAD + 1;
        Some((rng.below(span), rng.below(span)))
    } else {
        None
    };
    Transform { flip, crop }
}

/// Applies `t` to one `(y, x, c)` row; `fill` holds the padding value per channel.
pub fn apply_transform(row: &[f64], shape: ImageShape, fill: &[f64], t: Transform) -> Vec<f64> {
    let ImageShape { height: h, width: w, channels: c } = shape;
    debug_assert_eq!(row.len(), shape.len());
    let flipped: Vec<f64> = if t.flip {
        let mut out = vec![0.0; row.len()];
        for y in 0..h {
            for x in 0..w {
                let src = (y * w + (w - 1 - x)) * c;
                let dst = (y * w + x) * c;
                out[dst..dst + c].copy_from_slice(&row[src..src + c]);
            }
        }
        out
    } else {
        row.to_vec()
    };
    let Some((dy, dx)) = t.crop else {
        return flipped;
    };
    let mut out = vec![0.0; row.len()];
    for y in 0..h {
        for x in 0..w {
            // padded coordinate (y + dy, x + dx) maps to source (y + dy - PAD, x + dx - PAD)
            let sy = (y + dy).checked_sub(CROP_PAD).filter(|&v| v < h);
            let sx = (x + dx).checked_sub(CROP_PAD).filter(|&v| v < w);
            let dst = (y * w + x) * c;
            match (sy, sx) {
                (Some(sy), Some(sx)) => {
                    let src = (sy * w + sx) * c;
                    out[dst..dst + c].copy_from_slice(&flipped[src..src + c]);
                }
                _ => out[dst..dst + c].copy_from_slice(&fill[..c]),
            }
        }
    }
    out
}

/// Draws and applies a transform for an instance of `ds`. Flat (non-image)
/// datasets pass through unchanged without consuming randomness.
pub fn augment(ds: &Dataset, instance: ArrayView1<'_, f64>, rng: &mut RngStream) -> Array1<f64> {
    match ds.image_shape() {
        None => instance.to_owned(),
        Some(shape) => {
            let t = draw_transform(rng);
            let row = instance.to_vec();
            Array1::from(apply_transform(&row, shape, &ds.zero_fill(), t))
        }
    }
}

/// Standard deviation of the Gaussian jitter used on flat (non-image) rows:
/// `0.05 * spread`, or `0.05 *` the mean per-feature std when no spread is known.
pub fn jitter_sigma(ds: &Dataset) -> f64 {
    0.05 * ds.spread().unwrap_or_else(|| ds.features().std_axis(Axis(0), 0.0).mean().unwrap_or(1.0))
}

/// Adds isotropic Gaussian noise of standard deviation `sigma`.
pub fn jitter(instance: ArrayView1<'_, f64>, sigma: f64, rng: &mut RngStream) -> Array1<f64> {
    instance.mapv(|v| {
        let z: f64 = StandardNormal.sample(rng);
        v + sigma * z
    })
}

/// Training-time augmentation: flip/crop for images, [`jitter`] for flat rows.
pub fn augment_or_jitter(ds: &Dataset, instance: ArrayView1<'_, f64>, sigma: f64, rng: &mut RngStream) -> Array1<f64> {
    match ds.image_shape() {
        Some(_) => augment(ds, instance, rng),
        None => jitter(instance, sigma, rng),
    }
}
