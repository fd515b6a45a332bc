// SPDX-License-Identifier: Apache-2.0

use super::{DataError, Dataset, Result};
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};

/// Disjoint labeled / unlabeled / validation index sets, each kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolState {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub validation: Vec<usize>,
}

impl PoolState {
    pub fn new(mut labeled: Vec<usize>, mut unlabeled: Vec<usize>, mut validation: Vec<usize>) -> Self {
        labeled.sort_unstable();
        unlabeled.sort_unstable();
        validation.sort_unstable();
        Self { labeled, unlabeled, validation }
    }

    /// Checks disjointness and bounds against a dataset of `n` rows.
    pub fn check(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &i in self.labeled.iter().chain(&self.unlabeled).chain(&self.validation) {
            if i >= n {
                return Err(DataError::InvalidParameter(format!("pool index {i} out of range {n}")));
            }
            if seen[i] {
                return Err(DataError::InvalidParameter(format!("pool index {i} appears twice")));
            }
            seen[i] = true;
        }
        Ok(())
    }

    /// Moves `ids` from the unlabeled set to the labeled set.
    pub fn label(&mut self, ids: &[usize]) -> Result<()> {
        let mut take = ids.to_vec();
        take.sort_unstable();
        take.dedup();
        if take.len() != ids.len() {
            return Err(DataError::InvalidParameter("duplicate ids in labeling request".into()));
        }
        for &id in &take {
            if self.unlabeled.binary_search(&id).is_err() {
                return Err(DataError::NotUnlabeled { index: id });
            }
        }
        self.unlabeled.retain(|i| take.binary_search(i).is_err());
        self.labeled.extend_from_slice(&take);
        self.labeled.sort_unstable();
        Ok(())
    }
}

/// Carves `ceil(val_fraction * n)` validation indices, then `seed_size`
/// labeled indices, uniformly at random; the remainder is unlabeled.
pub fn init_pool(ds: &Dataset, seed_size: usize, val_fraction: f64, rng: &RngStream) -> Result<PoolState> {
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(DataError::InvalidParameter(format!("val_fraction {val_fraction} not in [0, 1)")));
    }
    let n = ds.len();
    let n_val = (val_fraction * n as f64).ceil() as usize;
    if seed_size + n_val > n {
        return Err(DataError::PoolTooSmall { needed: seed_size + n_val, available: n });
    }
    let mut r = rng.derive("pool");
    let mut order: Vec<usize> = (0..n).collect();
    r.shuffle(&mut order);
    let validation = order[..n_val].to_vec();
    let labeled = order[n_val..n_val + seed_size].to_vec();
    let unlabeled = order[n_val + seed_size..].to_vec();
    Ok(PoolState::new(labeled, unlabeled, validation))
}

/// Keeps at most `cap` unlabeled instances of each class, chosen uniformly
/// without replacement. Labeled and validation sets are untouched.
pub fn cap_per_class(ds: &Dataset, pool: &PoolState, cap: usize, rng: &RngStream) -> Result<PoolState> {
    if cap == 0 {
        return Err(DataError::InvalidParameter("cap must be at least 1".into()));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.num_classes()];
    for &i in &pool.unlabeled {
        by_class[ds.labels()[i]].push(i);
    }
    let mut r = rng.derive("cap");
    let mut kept = Vec::new();
    for members in &by_class {
        if members.len() <= cap {
            kept.extend_from_slice(members);
        } else {
            kept.extend(r.sample(members, cap));
        }
    }
    Ok(PoolState::new(pool.labeled.clone(), kept, pool.validation.clone()))
}
