// SPDX-License-Identifier: Apache-2.0

//! Flat binary model container.
//!
//! Layout (all integers little-endian):
//! `"ALLB"`, version `u16`, layer count `u32`, each layer dim `u32`,
//! schedule epoch `u64`, optimizer tag `u8` (0 none, 1 sgd, 2 adam),
//! Adam step `u64` (tag 2 only), then row-major `f64` tensors: every
//! weight and bias, followed by the optimizer slot tensors in the same order.

use super::model::{Gradients, ModelState, OptimizerSlots};
use super::{LearnerError, Result};
use ndarray::{Array1, Array2};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"ALLB";
pub const CHECKPOINT_VERSION: u16 = 1;

fn put_tensors(out: &mut Vec<u8>, g: &Gradients) {
    for (w, b) in g.weights.iter().zip(&g.biases) {
        for v in w.iter().chain(b.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

pub fn write_checkpoint(model: &ModelState) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(model.dims.len() as u32).to_le_bytes());
    for &d in &model.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(model.epoch as u64).to_le_bytes());
    let params = Gradients { weights: model.weights.clone(), biases: model.biases.clone() };
    match &model.slots {
        OptimizerSlots::Empty => {
            out.push(0);
            put_tensors(&mut out, &params);
        }
        OptimizerSlots::Sgd { velocity } => {
            out.push(1);
            put_tensors(&mut out, &params);
            put_tensors(&mut out, velocity);
        }
        OptimizerSlots::Adam { first, second, step } => {
            out.push(2);
            out.extend_from_slice(&step.to_le_bytes());
            put_tensors(&mut out, &params);
            put_tensors(&mut out, first);
            put_tensors(&mut out, second);
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| LearnerError::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| LearnerError::Checkpoint("size overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn tensors(&mut self, dims: &[usize]) -> Result<Gradients> {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..dims.len() - 1 {
            let w = self.f64s(dims[l + 1] * dims[l])?;
            weights.push(Array2::from_shape_vec((dims[l + 1], dims[l]), w).expect("sized"));
            biases.push(Array1::from(self.f64s(dims[l + 1])?));
        }
        Ok(Gradients { weights, biases })
    }
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<ModelState> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != CHECKPOINT_MAGIC {
        return Err(LearnerError::Checkpoint("bad magic".into()));
    }
    let version = u16::from_le_bytes(c.take(2)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(LearnerError::Checkpoint(format!("unsupported version {version}")));
    }
    let n = c.u32()? as usize;
    if !(2..=64).contains(&n) {
        return Err(LearnerError::Checkpoint(format!("{n} layer dims")));
    }
    let dims: Vec<usize> = (0..n).map(|_| c.u32().map(|d| d as usize)).collect::<Result<_>>()?;
    if dims.contains(&0) {
        return Err(LearnerError::Checkpoint("zero layer width".into()));
    }
    let epoch = c.u64()? as usize;
    let tag = c.take(1)?[0];
    let step = if tag == 2 { c.u64()? } else { 0 };
    let params = c.tensors(&dims)?;
    let slots = match tag {
        0 => OptimizerSlots::Empty,
        1 => OptimizerSlots::Sgd { velocity: c.tensors(&dims)? },
        2 => OptimizerSlots::Adam { first: c.tensors(&dims)?, second: c.tensors(&dims)?, step },
        t => return Err(LearnerError::Checkpoint(format!("unknown optimizer tag {t}"))),
    };
    if c.pos != bytes.len() {
        return Err(LearnerError::Checkpoint(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Ok(ModelState { dims, weights: params.weights, biases: params.biases, slots, epoch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::{adam_step, sgd_step, OptimizerConfig};
    use crate::RngStream;

    #[test]
    fn roundtrip_all_slot_kinds() {
        let base = ModelState::he_init(&[3, 4, 2], &RngStream::new(0, "init")).unwrap();
        let g = Gradients::zeros_like(&base);
        let mut sgd = base.clone();
        sgd_step(&mut sgd, &g, &OptimizerConfig::sgd()).unwrap();
        sgd.set_epoch(12);
        let mut adam = base.clone();
        adam_step(&mut adam, &g, &OptimizerConfig::adam()).unwrap();
        for m in [base, sgd, adam] {
            let bytes = write_checkpoint(&m);
            assert_eq!(&bytes[..4], b"ALLB");
            assert_eq!(read_checkpoint(&bytes).unwrap(), m);
        }
    }

    #[test]
    fn rejects_corruption() {
        let m = ModelState::zeros(&[2, 2]).unwrap();
        let bytes = write_checkpoint(&m);
        assert!(read_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_checkpoint(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(read_checkpoint(&long).is_err());
    }
}
