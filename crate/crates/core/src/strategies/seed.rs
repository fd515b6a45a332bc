// SPDX-License-Identifier: Apache-2.0

use super::coreset::farthest_first;
use super::facility::{facility_location_greedy_ids, inverse_distance_similarity};
use super::{Result, StrategyError};
use crate::rng::RngStream;
use ndarray::{Array1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// How the initial labeled set is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    Random,
    /// Representative: facility location over raw-feature similarity.
    FacilityLocation,
    /// Diverse: farthest-first traversal from the largest-norm instance.
    DispersionMin,
}

impl SeedKind {
    pub const NAMES: [&'static str; 3] = ["random", "facility_location", "dispersion_min"];

    pub fn as_str(&self) -> &'static str {
        match self {
            SeedKind::Random => "random",
            SeedKind::FacilityLocation => "facility_location",
            SeedKind::DispersionMin => "dispersion_min",
        }
    }
}

impl FromStr for SeedKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "random" => Ok(SeedKind::Random),
            "facility_location" => Ok(SeedKind::FacilityLocation),
            "dispersion_min" => Ok(SeedKind::DispersionMin),
            other => Err(format!("unknown seed kind {other:?}; valid: {}", Self::NAMES.join(", "))),
        }
    }
}

/// Picks `size` of the instances `ids` (rows of `features`) as the seed set.
pub fn seed_set(
    features: ArrayView2<'_, f64>,
    ids: &[usize],
    size: usize,
    kind: SeedKind,
    rng: &RngStream,
) -> Result<Vec<usize>> {
    let n = features.nrows();
    if ids.len() != n {
        return Err(StrategyError::Misaligned(format!("{} ids for {n} feature rows", ids.len())));
    }
    if size > n {
        return Err(StrategyError::BatchTooLarge { b: size, available: n });
    }
    if size == 0 {
        return Ok(Vec::new());
    }
    match kind {
        SeedKind::Random => Ok(rng.derive("seed-set").sample(ids, size)),
        SeedKind::FacilityLocation => {
            let sim = inverse_distance_similarity(features);
            facility_location_greedy_ids(sim.view(), ids, size, &[])
        }
        SeedKind::DispersionMin => {
            let norms: Array1<f64> = features.map_axis(Axis(1), |r| r.dot(&r));
            let mut start = 0;
            for k in 1..n {
                if norms[k] > norms[start] || (norms[k] == norms[start] && ids[k] < ids[start]) {
                    start = k;
                }
            }
            let mut nearest = super::geometry::squared_distances_to(features, features.row(start));
            let mut taken = vec![false; n];
            taken[start] = true;
            nearest[start] = 0.0;
            let mut chosen = vec![ids[start]];
            chosen.extend(farthest_first(features, ids, &mut nearest, taken, size - 1)?);
            Ok(chosen)
        }
    }
}
