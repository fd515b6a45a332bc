// SPDX-License-Identifier: Apache-2.0

//! Batch selection strategies and seed-set constructors.
//!
//! Every selector is a pure function of its [`SelectionRequest`]; stochastic
//! selectors read only the request's `select` stream.

mod badge;
mod coreset;
mod facility;
mod fass;
mod geometry;
mod glister;
mod scores;
mod seed;

pub use badge::{badge_select, kmeanspp_next_distribution, BadgeSelection, GradEmbedding};
pub use coreset::{coreset_select, k_center_cost};
pub use facility::{facility_location_greedy, facility_location_value, inverse_distance_similarity};
pub use fass::fass_select;
pub use geometry::{euclidean_distances, squared_distances};
pub use glister::{glister_select, GlisterContext};
pub use scores::{entropy_scores, least_confidence_scores, margin_scores, top_b};
pub use seed::{seed_set, SeedKind};

use crate::learner::{EmbeddingMatrix, ProbMatrix};
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("unknown strategy {name:?}; valid: {}", Strategy::NAMES.join(", "))]
    UnknownStrategy { name: String },
    #[error("batch size {b} exceeds {available} candidates")]
    BatchTooLarge { b: usize, available: usize },
    #[error("misaligned request: {0}")]
    Misaligned(String),
    #[error("invalid similarity matrix: {0}")]
    InvalidSimilarity(String),
    #[error("margin needs at least two classes")]
    TooFewClasses,
    #[error("glister needs a validation set and last-layer parameters")]
    MissingValidation,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, StrategyError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    Entropy,
    Margin,
    LeastConfidence,
    Badge,
    Coreset,
    Fass,
    Glister,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::Random,
        Strategy::Entropy,
        Strategy::Margin,
        Strategy::LeastConfidence,
        Strategy::Badge,
        Strategy::Coreset,
        Strategy::Fass,
        Strategy::Glister,
    ];
    pub const NAMES: [&'static str; 8] =
        ["random", "entropy", "margin", "least_confidence", "badge", "coreset", "fass", "glister"];

    pub fn as_str(&self) -> &'static str {
        Self::NAMES[*self as usize]
    }

    /// Whether the selector needs embeddings of the labeled set.
    pub fn needs_labeled_embeddings(&self) -> bool {
        matches!(self, Strategy::Coreset)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self> {
        Self::NAMES
            .iter()
            .position(|&n| n == s)
            .map(|i| Self::ALL[i])
            .ok_or_else(|| StrategyError::UnknownStrategy { name: s.to_owned() })
    }
}

/// Everything a selector may look at for one AL round.
#[derive(Clone, Debug)]
pub struct SelectionRequest<'a> {
    /// Class probabilities of the candidates.
    pub probs: &'a ProbMatrix,
    /// Penultimate embeddings of the candidates.
    pub embeddings: &'a EmbeddingMatrix,
    /// Instance ids aligned with the rows above.
    pub candidate_ids: &'a [usize],
    pub batch_size: usize,
    pub rng: RngStream,
    /// Penultimate embeddings of the labeled set (CoreSet centers).
    pub labeled_embeddings: Option<&'a EmbeddingMatrix>,
    /// Filter multiplier for FASS.
    pub fass_beta: usize,
    pub glister: Option<GlisterContext<'a>>,
}

impl SelectionRequest<'_> {
    fn check(&self) -> Result<()> {
        let m = self.candidate_ids.len();
        if self.probs.nrows() != m || self.embeddings.nrows() != m {
            return Err(StrategyError::Misaligned(format!(
                "{m} ids, {} probability rows, {} embedding rows",
                self.probs.nrows(),
                self.embeddings.nrows()
            )));
        }
        if self.batch_size > m {
            return Err(StrategyError::BatchTooLarge { b: self.batch_size, available: m });
        }
        Ok(())
    }
}

/// Result of [`select`].
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub ids: Vec<usize>,
    pub seconds: f64,
    /// Set when a selector had to fall back to uniform sampling.
    pub degenerate: bool,
}

pub fn select(strategy: Strategy, req: &SelectionRequest<'_>) -> Result<Selection> {
    req.check()?;
    let start = Instant::now();
    let b = req.batch_size;
    let ids = req.candidate_ids;
    let mut degenerate = false;
    let chosen = match strategy {
        Strategy::Random => req.rng.derive("random").sample(ids, b),
        Strategy::Entropy => top_b(&entropy_scores(req.probs), ids, b)?,
        Strategy::Margin => top_b(&margin_scores(req.probs)?, ids, b)?,
        Strategy::LeastConfidence => top_b(&least_confidence_scores(req.probs), ids, b)?,
        Strategy::Badge => {
            let emb = GradEmbedding::new(req.probs, req.embeddings)?;
            let sel = badge_select(&emb, ids, b, &req.rng)?;
            degenerate = sel.degenerate;
            sel.ids
        }
        Strategy::Coreset => coreset_select(req.embeddings, req.labeled_embeddings, ids, b)?,
        Strategy::Fass => fass_select(req.probs, req.embeddings, ids, b, req.fass_beta)?,
        Strategy::Glister => {
            let ctx = req.glister.as_ref().ok_or(StrategyError::MissingValidation)?;
            glister_select(req.probs, req.embeddings, ids, b, ctx)?
        }
    };
    Ok(Selection { ids: chosen, seconds: start.elapsed().as_secs_f64(), degenerate })
}
