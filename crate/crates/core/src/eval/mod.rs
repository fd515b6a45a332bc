// SPDX-License-Identifier: Apache-2.0

//! Learning curves, labeling efficiency, multi-seed aggregation and
//! significance testing.

mod curve;
mod io;
mod welch;

pub use curve::{
    aggregate, efficiency_curve, labeling_efficiency, min_labels, AggregateCurve, AggregatePoint, Curve,
    EfficiencyPoint,
};
pub use io::{
    format_float, read_aggregate_csv, read_curve_csv, read_curve_any, write_aggregate_csv, write_curve_csv,
    write_efficiency_csv,
};
pub use welch::{welch_t_test, GroupStats, WelchResult};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("curve is empty")]
    EmptyCurve,
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("target accuracy {target} is never reached")]
    NotReached { target: f64 },
    #[error("runs do not share a label-count grid")]
    MismatchedGrids,
    #[error("invalid statistics: {0}")]
    InvalidStats(String),
    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, EvalError>;
