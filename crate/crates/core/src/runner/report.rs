// SPDX-License-Identifier: Apache-2.0

use super::config::ExperimentConfig;
use super::records::{write_rounds_csv, RoundRecord};
use super::svg::render_curves_svg;
use super::{Result, RunnerError};
use crate::eval::{aggregate, efficiency_curve, format_float, AggregateCurve, Curve};
use crate::strategies::Strategy;
use serde::{Serialize, Serializer};
use std::fs;
use std::path::{Path, PathBuf};

fn finite_or_inf<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyTiming {
    pub strategy: Strategy,
    pub train_s: f64,
    pub select_s: f64,
    /// Selection time relative to the fastest selector.
    #[serde(serialize_with = "finite_or_inf")]
    pub select_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingReport {
    pub total_train_s: f64,
    pub total_select_s: f64,
    /// `total_train_s / total_select_s`; infinite when nothing was spent selecting.
    #[serde(serialize_with = "finite_or_inf")]
    pub train_select_ratio: f64,
    pub per_strategy: Vec<StrategyTiming>,
}

/// Sums train and select time overall and per strategy (first-appearance order).
pub fn timing_report(records: &[RoundRecord]) -> TimingReport {
    let mut per: Vec<StrategyTiming> = Vec::new();
    for r in records {
        let i = match per.iter().position(|p| p.strategy == r.strategy) {
            Some(i) => i,
            None => {
                per.push(StrategyTiming { strategy: r.strategy, train_s: 0.0, select_s: 0.0, select_factor: 0.0 });
                per.len() - 1
            }
        };
        per[i].train_s += r.train_s;
        per[i].select_s += r.select_s;
    }
    let fastest = per.iter().map(|p| p.select_s).fold(f64::INFINITY, f64::min);
    for p in &mut per {
        p.select_factor = if p.select_s == fastest { 1.0 } else { ratio(p.select_s, fastest) };
    }
    let total_train_s: f64 = per.iter().map(|p| p.train_s).sum();
    let total_select_s: f64 = per.iter().map(|p| p.select_s).sum();
    TimingReport { total_train_s, total_select_s, train_select_ratio: ratio(total_train_s, total_select_s), per_strategy: per }
}

/// Aggregate accuracy curve of each strategy across its run seeds.
pub fn aggregate_by_strategy(records: &[RoundRecord]) -> Result<Vec<(Strategy, AggregateCurve)>> {
    let mut order: Vec<Strategy> = Vec::new();
    for r in records {
        if !order.contains(&r.strategy) {
            order.push(r.strategy);
        }
    }
    let mut out = Vec::with_capacity(order.len());
    for strategy in order {
        let mut seeds: Vec<u64> = Vec::new();
        for r in records.iter().filter(|r| r.strategy == strategy) {
            if !seeds.contains(&r.run_seed) {
                seeds.push(r.run_seed);
            }
        }
        let mut curves = Vec::with_capacity(seeds.len());
        for seed in seeds {
            let mut pts: Vec<(usize, usize, f64)> = records
                .iter()
                .filter(|r| r.strategy == strategy && r.run_seed == seed)
                .map(|r| (r.round, r.labeled, r.test_acc))
                .collect();
            pts.sort_by_key(|p| p.0);
            curves.push(Curve::new(pts.into_iter().map(|(_, l, a)| (l, a)).collect())?);
        }
        out.push((strategy, aggregate(&curves)?));
    }
    Ok(out)
}

/// Ten evenly spaced targets from just above the baseline's first mean
/// accuracy up to its best mean accuracy.
pub fn efficiency_targets(rs: &AggregateCurve) -> Vec<f64> {
    let lo = rs.points[0].mean;
    let hi = rs.points.iter().map(|p| p.mean).fold(lo, f64::max);
    (1..=10).map(|k| lo + (hi - lo) * k as f64 / 10.0).collect()
}

fn write(path: PathBuf, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
    fs::write(&path, bytes).map_err(|e| RunnerError::io(&path, e))?;
    Ok(path)
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| RunnerError::Records(e.to_string());
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row).map_err(err)?;
    }
    w.into_inner().map_err(|e| RunnerError::Records(e.to_string()))
}

/// Per-run counters that are not part of `rounds.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunTotals {
    pub run_seed: u64,
    pub strategy: Strategy,
    /// Gradient updates summed over all rounds.
    pub updates: u64,
}

/// Writes rounds.csv, aggregate.csv, efficiency.csv (when a random baseline
/// ran), summary.json and curves.svg into `out_dir`.
pub fn emit_outputs(
    cfg: &ExperimentConfig,
    records: &[RoundRecord],
    totals: &[RunTotals],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| RunnerError::io(out_dir, e))?;
    let mut written = Vec::new();

    let mut buf = Vec::new();
    write_rounds_csv(records, &mut buf)?;
    written.push(write(out_dir.join("rounds.csv"), buf)?);

    let curves = aggregate_by_strategy(records)?;
    let rows = curves
        .iter()
        .flat_map(|(s, agg)| {
            agg.points.iter().map(move |p| {
                vec![s.as_str().to_owned(), p.labels.to_string(), format_float(p.mean), format_float(p.std), p.n.to_string()]
            })
        })
        .collect();
    written.push(write(out_dir.join("aggregate.csv"), csv_bytes(&["strategy", "labels", "mean", "std", "n"], rows)?)?);

    let baseline = curves.iter().find(|(s, _)| *s == Strategy::Random);
    let efficiency_note = match baseline {
        Some((_, rs)) => {
            let targets = efficiency_targets(rs);
            let mut rows = Vec::new();
            for (s, agg) in curves.iter().filter(|(s, _)| *s != Strategy::Random) {
                for p in efficiency_curve(agg, rs, &targets)? {
                    rows.push(vec![
                        s.as_str().to_owned(),
                        format_float(p.target),
                        p.ratio.map(format_float).unwrap_or_default(),
                        p.ratio.is_some().to_string(),
                    ]);
                }
            }
            let header = ["strategy", "target", "ratio", "reached"];
            written.push(write(out_dir.join("efficiency.csv"), csv_bytes(&header, rows)?)?);
            "efficiency.csv lists labeling efficiency (random labels / strategy labels) against the random strategy"
                .to_owned()
        }
        None => {
            let stale = out_dir.join("efficiency.csv");
            if stale.exists() {
                fs::remove_file(&stale).map_err(|e| RunnerError::io(&stale, e))?;
            }
            "efficiency.csv not written: include strategy \"random\" to get a labeling-efficiency baseline".to_owned()
        }
    };

    let finals: serde_json::Map<String, serde_json::Value> = curves
        .iter()
        .map(|(s, agg)| {
            let last = agg.last();
            (s.as_str().to_owned(), serde_json::json!({ "labels": last.labels, "mean": last.mean, "std": last.std, "n": last.n }))
        })
        .collect();
    let summary = serde_json::json!({
        "config": cfg,
        "records": records.len(),
        "final_accuracy": finals,
        "timing": timing_report(records),
        "runs": totals,
        "efficiency": efficiency_note,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    written.push(write(out_dir.join("summary.json"), text)?);

    let named: Vec<(String, AggregateCurve)> = curves.into_iter().map(|(s, a)| (s.as_str().to_owned(), a)).collect();
    written.push(write(out_dir.join("curves.svg"), render_curves_svg(&named))?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::StopReason;

    fn rec(strategy: Strategy, seed: u64, round: usize, acc: f64, train_s: f64, select_s: f64) -> RoundRecord {
        RoundRecord {
            run_seed: seed,
            strategy,
            round,
            labeled: 10 + 10 * round,
            test_acc: acc,
            train_s,
            select_s,
            epochs: 1,
            stop_reason: StopReason::MaxEpochs,
        }
    }

    #[test]
    fn totals_and_ratio() {
        let records: Vec<_> = (0..3).map(|r| rec(Strategy::Entropy, 0, r, 0.5, 10.0, 1.0)).collect();
        let t = timing_report(&records);
        assert_eq!((t.total_train_s, t.total_select_s, t.train_select_ratio), (30.0, 3.0, 10.0));
    }

    #[test]
    fn zero_selection_time_is_infinite() {
        let t = timing_report(&[rec(Strategy::Random, 0, 0, 0.5, 2.0, 0.0)]);
        assert!(t.train_select_ratio.is_infinite());
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json["train_select_ratio"], "inf");
    }

    #[test]
    fn per_strategy_factor() {
        let records = vec![rec(Strategy::Badge, 0, 0, 0.5, 0.0, 60.0), rec(Strategy::Entropy, 0, 0, 0.5, 0.0, 3.0)];
        let t = timing_report(&records);
        assert_eq!(t.per_strategy[0].select_factor, 20.0);
        assert_eq!(t.per_strategy[1].select_factor, 1.0);
    }

    #[test]
    fn aggregates_per_strategy() {
        let records = vec![
            rec(Strategy::Random, 0, 0, 0.4, 0.0, 0.0),
            rec(Strategy::Random, 0, 1, 0.6, 0.0, 0.0),
            rec(Strategy::Random, 1, 1, 0.8, 0.0, 0.0),
            rec(Strategy::Random, 1, 0, 0.6, 0.0, 0.0),
        ];
        let curves = aggregate_by_strategy(&records).unwrap();
        assert_eq!(curves.len(), 1);
        let agg = &curves[0].1;
        assert_eq!(agg.points[0].labels, 10);
        assert!((agg.points[0].mean - 0.5).abs() < 1e-12);
        assert!((agg.points[1].mean - 0.7).abs() < 1e-12);
        assert_eq!(agg.points[1].n, 2);
    }

    #[test]
    fn targets_span_baseline() {
        let agg = aggregate(&[Curve::new(vec![(10, 0.5), (20, 0.7), (30, 0.6)]).unwrap()]).unwrap();
        let t = efficiency_targets(&agg);
        assert_eq!(t.len(), 10);
        assert!((t[0] - 0.52).abs() < 1e-12);
        assert!((t[9] - 0.7).abs() < 1e-12);
    }
}
