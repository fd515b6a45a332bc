// SPDX-License-Identifier: Apache-2.0

//! Multilayer perceptron classifier, optimizers, the training loop with its
//! stopping rules, and GradMatch-style subset training.

mod checkpoint;
mod gradmatch;
mod model;
mod optim;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradmatch::{gradmatch_select, gradmatch_select_per_class, nnls, GradMatchSelection};
pub use model::{
    accuracy_on, argmax, embed, last_layer_gradients, predict_probs, softmax_rows, test_accuracy, EmbeddingMatrix,
    ForwardPass, Gradients, ModelState, OptimizerSlots, ProbMatrix,
};
pub use optim::{adam_step, cosine_lr, sgd_step, OptimizerConfig, OptimizerKind};
pub use train::{
    reset_or_update, train, InitPolicy, StopReason, StoppingRule, SubsetTrainSpec, TrainConfig, TrainStats,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite loss at batch row {row}")]
    NonFiniteLoss { row: usize },
    #[error("non-finite parameter after {0} update")]
    NonFiniteUpdate(&'static str),
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("optimizer mismatch: {0}")]
    Optimizer(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("update policy needs a previous model")]
    NoPreviousModel,
    #[error("empty gradient matrix")]
    EmptyGradients,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
}

pub type Result<T> = std::result::Result<T, LearnerError>;
