// SPDX-License-Identifier: Apache-2.0

pub mod data;
pub mod eval;
pub mod learner;
pub mod rng;
pub mod runner;
pub mod strategies;

pub use rng::RngStream;
