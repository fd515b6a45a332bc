// SPDX-License-Identifier: Apache-2.0

use super::{EvalError, Result};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

/// Summary statistics of one group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl GroupStats {
    pub fn new(mean: f64, std: f64, n: usize) -> Self {
        Self { mean, std, n }
    }

    /// Sample statistics (n - 1 denominator).
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, n }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub dof: f64,
    /// Two-sided p-value.
    pub p: f64,
    /// Both variances are zero; `p` is 1 for equal means and 0 otherwise.
    pub degenerate: bool,
}

impl WelchResult {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p < alpha
    }
}

/// Unequal-variance two-sample t-test with Welch-Satterthwaite degrees of freedom.
pub fn welch_t_test(a: GroupStats, b: GroupStats) -> Result<WelchResult> {
    if a.n < 2 || b.n < 2 {
        return Err(EvalError::InvalidStats(format!("group sizes {} and {} must be >= 2", a.n, b.n)));
    }
    if !(a.std >= 0.0 && b.std >= 0.0) || !a.mean.is_finite() || !b.mean.is_finite() {
        return Err(EvalError::InvalidStats("means must be finite and stds non-negative".into()));
    }
    let va = a.std * a.std / a.n as f64;
    let vb = b.std * b.std / b.n as f64;
    let diff = a.mean - b.mean;
    if va + vb == 0.0 {
        let (t, p) = if diff == 0.0 { (0.0, 1.0) } else { (diff.signum() * f64::INFINITY, 0.0) };
        return Ok(WelchResult { t, dof: (a.n + b.n - 2) as f64, p, degenerate: true });
    }
    let t = diff / (va + vb).sqrt();
    let dof = (va + vb).powi(2) / (va * va / (a.n - 1) as f64 + vb * vb / (b.n - 1) as f64);
    // P(|T| > |t|) = I_{dof / (dof + t^2)}(dof / 2, 1 / 2)
    let x = dof / (dof + t * t);
    let p = beta_reg(dof / 2.0, 0.5, x).clamp(0.0, 1.0);
    Ok(WelchResult { t, dof, p, degenerate: false })
}
