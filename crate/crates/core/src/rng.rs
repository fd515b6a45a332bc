// SPDX-License-Identifier: Apache-2.0

//! Labelled, platform-independent random streams.
//!
//! Every consumer (pool splitting, augmentation, selection, initialization)
//! owns its own stream derived from `(seed, label)`. The key is the SHA-256
//! digest of the little-endian seed followed by the label bytes, fed to a
//! ChaCha8 generator, so the sequence is fixed across platforms and releases.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    label: String,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, label: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(label.as_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        Self {
            seed,
            label: label.to_owned(),
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// A child stream `label/sub`, independent of the parent's position.
    pub fn derive(&self, sub: &str) -> Self {
        Self::new(self.seed, &format!("{}/{}", self.label, sub))
    }

    /// Child stream for one AL round.
    pub fn for_round(&self, round: usize) -> Self {
        self.derive(&format!("round{round}"))
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)` by rejection, free of modulo bias.
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "below() needs a positive bound");
        let bound = bound as u64;
        let zone = u64::MAX - (u64::MAX % bound) - 1;
        loop {
            let x = self.inner.next_u64();
            if x <= zone {
                return (x % bound) as usize;
            }
        }
    }

    /// Fisher-Yates shuffle driven by [`RngStream::below`].
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct elements of `items`, uniformly without replacement, in draw order.
    pub fn sample<T: Clone>(&mut self, items: &[T], k: usize) -> Vec<T> {
        assert!(k <= items.len(), "cannot sample {k} of {}", items.len());
        let mut idx: Vec<usize> = (0..items.len()).collect();
        for i in 0..k {
            let j = i + self.below(items.len() - i);
            idx.swap(i, j);
        }
        idx[..k].iter().map(|&i| items[i].clone()).collect()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}
