// SPDX-License-Identifier: Apache-2.0

use super::{EvalError, Result};
use serde::{Deserialize, Serialize};

/// Test accuracy against labeled-set size; label counts strictly increase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    points: Vec<(usize, f64)>,
}

impl Curve {
    pub fn new(points: Vec<(usize, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(EvalError::EmptyCurve);
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(EvalError::InvalidCurve(format!("label counts {} then {}", w[0].0, w[1].0)));
            }
        }
        if let Some(&(l, a)) = points.iter().find(|(_, a)| !(0.0..=1.0).contains(a)) {
            return Err(EvalError::InvalidCurve(format!("accuracy {a} at {l} labels outside [0, 1]")));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(usize, f64)] {
        &self.points
    }

    pub fn labels(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn final_accuracy(&self) -> f64 {
        self.points.last().unwrap().1
    }
}

/// Smallest label count at which the running maximum of the curve reaches
/// `target`, linearly interpolated between recorded points.
pub fn min_labels(curve: &Curve, target: f64) -> Result<f64> {
    let pts = curve.points();
    let mut prev: Option<(f64, f64)> = None;
    let mut best = f64::NEG_INFINITY;
    for &(labels, acc) in pts {
        let x = labels as f64;
        best = best.max(acc);
        if best >= target {
            return Ok(match prev {
                None => x,
                Some((x0, y0)) => x0 + (target - y0) / (best - y0) * (x - x0),
            });
        }
        prev = Some((x, best));
    }
    Err(EvalError::NotReached { target })
}

/// Labels random sampling needs divided by labels the AL strategy needs to
/// reach `target`; above 1 means the strategy is more label-efficient.
pub fn labeling_efficiency(al: &Curve, rs: &Curve, target: f64) -> Result<f64> {
    let rs_labels = min_labels(rs, target)?;
    let al_labels = min_labels(al, target)?;
    Ok(rs_labels / al_labels)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub labels: usize,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Mean and sample standard deviation per label count across runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve {
    pub points: Vec<AggregatePoint>,
}

impl AggregateCurve {
    pub fn mean_curve(&self) -> Result<Curve> {
        Curve::new(self.points.iter().map(|p| (p.labels, p.mean)).collect())
    }

    pub fn at(&self, labels: usize) -> Option<&AggregatePoint> {
        self.points.iter().find(|p| p.labels == labels)
    }

    pub fn last(&self) -> &AggregatePoint {
        self.points.last().expect("non-empty aggregate")
    }
}

pub fn aggregate(runs: &[Curve]) -> Result<AggregateCurve> {
    let first = runs.first().ok_or(EvalError::EmptyCurve)?;
    let grid = first.labels();
    if runs.iter().any(|r| r.labels() != grid) {
        return Err(EvalError::MismatchedGrids);
    }
    let n = runs.len();
    let points = grid
        .iter()
        .enumerate()
        .map(|(k, &labels)| {
            let values: Vec<f64> = runs.iter().map(|r| r.points()[k].1).collect();
            let mean = values.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            AggregatePoint { labels, mean, std, n }
        })
        .collect();
    Ok(AggregateCurve { points })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyPoint {
    pub target: f64,
    /// `None` when either mean curve never reaches the target.
    pub ratio: Option<f64>,
}

/// [`labeling_efficiency`] of the mean curves at every target.
pub fn efficiency_curve(al: &AggregateCurve, rs: &AggregateCurve, targets: &[f64]) -> Result<Vec<EfficiencyPoint>> {
    let al = al.mean_curve()?;
    let rs = rs.mean_curve()?;
    targets
        .iter()
        .map(|&target| match labeling_efficiency(&al, &rs, target) {
            Ok(r) => Ok(EfficiencyPoint { target, ratio: Some(r) }),
            Err(EvalError::NotReached { .. }) => Ok(EfficiencyPoint { target, ratio: None }),
            Err(e) => Err(e),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(p: &[(usize, f64)]) -> Curve {
        Curve::new(p.to_vec()).unwrap()
    }

    #[test]
    fn interpolated_crossing() {
        let c = curve(&[(100, 0.5), (200, 0.8)]);
        assert!((min_labels(&c, 0.65).unwrap() - 150.0).abs() < 1e-9);
        assert_eq!(min_labels(&c, 0.5).unwrap(), 100.0);
        assert_eq!(min_labels(&c, 0.81), Err(EvalError::NotReached { target: 0.81 }));
    }

    #[test]
    fn running_max_crossing() {
        let c = curve(&[(100, 0.6), (200, 0.55), (300, 0.7)]);
        assert_eq!(min_labels(&c, 0.6).unwrap(), 100.0);
        // running max is (0.6, 0.6, 0.7): 0.65 is crossed halfway between 200 and 300
        assert!((min_labels(&c, 0.65).unwrap() - 250.0).abs() < 1e-9);
    }

    #[test]
    fn efficiency_definition() {
        let rs = curve(&[(100, 0.5), (300, 0.8)]);
        let al = curve(&[(100, 0.5), (150, 0.8)]);
        assert!((labeling_efficiency(&al, &rs, 0.8).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(labeling_efficiency(&rs, &rs, 0.7).unwrap(), 1.0);
    }

    #[test]
    fn aggregate_statistics() {
        let a = aggregate(&[curve(&[(10, 0.9), (20, 0.5)])]).unwrap();
        assert_eq!(a.points[0], AggregatePoint { labels: 10, mean: 0.9, std: 0.0, n: 1 });
        let runs = [curve(&[(10, 0.9)]), curve(&[(10, 0.9)]), curve(&[(10, 0.9)])];
        let a = aggregate(&runs).unwrap();
        assert!((a.points[0].mean - 0.9).abs() < 1e-15);
        assert!(a.points[0].std < 1e-15);
        let runs = [curve(&[(10, 0.2)]), curve(&[(10, 0.4)])];
        assert!((aggregate(&runs).unwrap().points[0].std - 0.02f64.sqrt()).abs() < 1e-15);
        assert_eq!(aggregate(&[curve(&[(10, 0.1)]), curve(&[(11, 0.1)])]), Err(EvalError::MismatchedGrids));
    }

    #[test]
    fn table_style_record() {
        // a "91.0 +- 0.2 at 25000 labels" cell stored as an aggregate point
        let p = AggregatePoint { labels: 25_000, mean: 0.910, std: 0.002, n: 3 };
        let agg = AggregateCurve { points: vec![p] };
        assert_eq!(agg.at(25_000).unwrap().mean, 0.910);
        assert_eq!(agg.last().std, 0.002);
    }

    #[test]
    fn efficiency_curve_keeps_unreached() {
        let a = aggregate(&[curve(&[(100, 0.5), (200, 0.7)])]).unwrap();
        let pts = efficiency_curve(&a, &a, &[0.6, 0.95]).unwrap();
        assert_eq!(pts[0].ratio, Some(1.0));
        assert_eq!(pts[1].ratio, None);
    }

    #[test]
    fn invalid_curves() {
        assert!(Curve::new(vec![]).is_err());
        assert!(Curve::new(vec![(10, 0.5), (10, 0.6)]).is_err());
        assert!(Curve::new(vec![(10, 1.5)]).is_err());
    }
}
