// SPDX-License-Identifier: Apache-2.0

//! Experiment orchestration: configuration, the active-learning loop,
//! per-round persistence and output emission.

mod config;
mod experiment;
mod records;
mod report;
mod svg;

pub use config::{
    check_budget, load_config, load_config_file, usable_pool, AlConfig, DatasetConfig, DatasetSource,
    ExperimentConfig, ModelConfig, RunConfig, TrainSpec,
};
pub use experiment::{load_datasets, run_experiment, run_experiment_with, RunOptions, SeedSetup};
pub use records::{read_rounds_csv, write_rounds_csv, RoundRecord, ROUNDS_HEADER};
pub use report::{
    aggregate_by_strategy, efficiency_targets, emit_outputs, timing_report, RunTotals, StrategyTiming, TimingReport,
};
pub use svg::render_curves_svg;

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path:?}: {msg}")]
    Read { path: PathBuf, msg: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid {key}: {msg}")]
    Invalid { key: String, msg: String },
    #[error(transparent)]
    Strategy(#[from] crate::strategies::StrategyError),
    #[error(
        "infeasible budget: seed_size {seed_size} + rounds {rounds} x batch_size {batch_size} = {needed} \
         exceeds the {available} usable pool instances"
    )]
    Infeasible { seed_size: usize, rounds: usize, batch_size: usize, needed: usize, available: usize },
}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path:?}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error(transparent)]
    Learner(#[from] crate::learner::LearnerError),
    #[error(transparent)]
    Strategy(#[from] crate::strategies::StrategyError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error("rounds csv: {0}")]
    Records(String),
    #[error("cannot resume from {path:?}: {msg}")]
    Resume { path: PathBuf, msg: String },
    #[error("seed {seed}, strategy {strategy}, round {round}: {source}")]
    Round { seed: u64, strategy: String, round: usize, source: Box<RunnerError> },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl RunnerError {
    /// True for errors caused by the configuration rather than by running it.
    pub fn is_config_error(&self) -> bool {
        match self {
            RunnerError::Config(_) => true,
            RunnerError::Round { source, .. } => source.is_config_error(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunnerError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, RunnerError>;
