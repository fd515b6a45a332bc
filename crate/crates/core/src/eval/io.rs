// SPDX-License-Identifier: Apache-2.0

//! CSV forms: `labels,accuracy` (one run), `labels,mean,std,n` (aggregate),
//! `target,ratio,reached` (efficiency).

use super::{AggregateCurve, AggregatePoint, Curve, EfficiencyPoint, EvalError, Result};
use std::io::{Read, Write};

/// Rounds to 9 significant digits and prints the shortest decimal form.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("valid float literal");
    format!("{rounded}")
}

fn csv_err(e: impl std::fmt::Display) -> EvalError {
    EvalError::Csv(e.to_string())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    rec.get(i)
        .ok_or_else(|| csv_err(format!("missing column {name}")))?
        .trim()
        .parse()
        .map_err(|_| csv_err(format!("bad {name} value {:?}", &rec[i])))
}

fn expect_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let h = rdr.headers().map_err(csv_err)?;
    if h.iter().collect::<Vec<_>>() != expected {
        return Err(csv_err(format!("header {:?}, expected {}", h, expected.join(","))));
    }
    Ok(())
}

pub fn write_curve_csv<W: Write>(curve: &Curve, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["labels", "accuracy"]).map_err(csv_err)?;
    for &(l, a) in curve.points() {
        w.write_record([l.to_string(), format_float(a)]).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

pub fn read_curve_csv<R: Read>(r: R) -> Result<Curve> {
    let mut rdr = csv::Reader::from_reader(r);
    expect_header(&mut rdr, &["labels", "accuracy"])?;
    let mut pts = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        pts.push((field(&rec, 0, "labels")?, field(&rec, 1, "accuracy")?));
    }
    Curve::new(pts)
}

pub fn write_aggregate_csv<W: Write>(agg: &AggregateCurve, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["labels", "mean", "std", "n"]).map_err(csv_err)?;
    for p in &agg.points {
        w.write_record([p.labels.to_string(), format_float(p.mean), format_float(p.std), p.n.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

pub fn read_aggregate_csv<R: Read>(r: R) -> Result<AggregateCurve> {
    let mut rdr = csv::Reader::from_reader(r);
    expect_header(&mut rdr, &["labels", "mean", "std", "n"])?;
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        points.push(AggregatePoint {
            labels: field(&rec, 0, "labels")?,
            mean: field(&rec, 1, "mean")?,
            std: field(&rec, 2, "std")?,
            n: field(&rec, 3, "n")?,
        });
    }
    if points.is_empty() {
        return Err(EvalError::EmptyCurve);
    }
    Ok(AggregateCurve { points })
}

/// Reads either curve form; aggregates yield their mean curve.
pub fn read_curve_any(text: &str) -> Result<Curve> {
    let header = text.lines().next().unwrap_or("").trim();
    if header == "labels,accuracy" {
        read_curve_csv(text.as_bytes())
    } else {
        read_aggregate_csv(text.as_bytes())?.mean_curve()
    }
}

pub fn write_efficiency_csv<W: Write>(points: &[EfficiencyPoint], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["target", "ratio", "reached"]).map_err(csv_err)?;
    for p in points {
        let (ratio, reached) = match p.ratio {
            Some(r) => (format_float(r), "true"),
            None => (String::new(), "false"),
        };
        w.write_record([format_float(p.target), ratio, reached.into()]).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}
