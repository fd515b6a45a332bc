// SPDX-License-Identifier: Apache-2.0

use super::{Result, RunnerError};
use crate::eval::format_float;
use crate::learner::StopReason;
use crate::strategies::Strategy;
use std::io::{Read, Write};

pub const ROUNDS_HEADER: [&str; 9] =
    ["run_seed", "strategy", "round", "labeled", "test_acc", "train_s", "select_s", "epochs", "stop_reason"];

/// One line of `rounds.csv`: the state after training in `round`.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub run_seed: u64,
    pub strategy: Strategy,
    pub round: usize,
    pub labeled: usize,
    pub test_acc: f64,
    pub train_s: f64,
    /// Time spent choosing the next batch; 0 in the last round.
    pub select_s: f64,
    pub epochs: usize,
    pub stop_reason: StopReason,
}

impl RoundRecord {
    fn fields(&self) -> [String; 9] {
        [
            self.run_seed.to_string(),
            self.strategy.as_str().to_owned(),
            self.round.to_string(),
            self.labeled.to_string(),
            format_float(self.test_acc),
            format_float(self.train_s),
            format_float(self.select_s),
            self.epochs.to_string(),
            self.stop_reason.as_str().to_owned(),
        ]
    }

    fn parse(rec: &csv::StringRecord, line: u64) -> Result<Self> {
        let bad = |what: &str| RunnerError::Records(format!("line {line}: bad {what}"));
        if rec.len() != ROUNDS_HEADER.len() {
            return Err(RunnerError::Records(format!("line {line}: {} fields, expected 9", rec.len())));
        }
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(ROUNDS_HEADER[i]));
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(ROUNDS_HEADER[i]));
        Ok(RoundRecord {
            run_seed: rec[0].parse().map_err(|_| bad("run_seed"))?,
            strategy: rec[1].parse().map_err(|_| bad("strategy"))?,
            round: int(2)?,
            labeled: int(3)?,
            test_acc: num(4)?,
            train_s: num(5)?,
            select_s: num(6)?,
            epochs: int(7)?,
            stop_reason: StopReason::parse(&rec[8]).ok_or_else(|| bad("stop_reason"))?,
        })
    }
}

fn csv_err(e: csv::Error) -> RunnerError {
    RunnerError::Records(e.to_string())
}

/// Writes records, with the header line when `header` is set.
pub(crate) fn write_records<W: Write>(records: &[RoundRecord], w: W, header: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    if header {
        w.write_record(ROUNDS_HEADER).map_err(csv_err)?;
    }
    for r in records {
        w.write_record(r.fields()).map_err(csv_err)?;
    }
    w.flush().map_err(|e| RunnerError::Records(e.to_string()))
}

pub fn write_rounds_csv<W: Write>(records: &[RoundRecord], w: W) -> Result<()> {
    write_records(records, w, true)
}

pub fn read_rounds_csv<R: Read>(r: R) -> Result<Vec<RoundRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?;
    if header.iter().ne(ROUNDS_HEADER) {
        return Err(RunnerError::Records(format!("header {header:?}, expected {}", ROUNDS_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push(RoundRecord::parse(&rec, line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(round: usize) -> RoundRecord {
        RoundRecord {
            run_seed: 7,
            strategy: Strategy::Badge,
            round,
            labeled: 100 + 50 * round,
            test_acc: 2.0 / 3.0,
            train_s: 0.125,
            select_s: 0.0,
            epochs: 12,
            stop_reason: StopReason::Plateau,
        }
    }

    #[test]
    fn exact_text() {
        let mut buf = Vec::new();
        write_rounds_csv(&[rec(0)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "run_seed,strategy,round,labeled,test_acc,train_s,select_s,epochs,stop_reason\n\
             7,badge,0,100,0.666666667,0.125,0,12,plateau\n"
        );
    }

    #[test]
    fn reparse_then_rewrite_is_identical() {
        let records: Vec<_> = (0..4).map(rec).collect();
        let mut first = Vec::new();
        write_rounds_csv(&records, &mut first).unwrap();
        let parsed = read_rounds_csv(first.as_slice()).unwrap();
        let mut second = Vec::new();
        write_rounds_csv(&parsed, &mut second).unwrap();
        assert_eq!(first, second);
        assert_eq!(parsed[1].labeled, 150);
        assert_eq!(parsed[1].stop_reason, StopReason::Plateau);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(read_rounds_csv("a,b\n".as_bytes()).is_err());
        let text = format!("{}\n7,bald,0,100,0.5,0,0,1,plateau\n", ROUNDS_HEADER.join(","));
        assert!(read_rounds_csv(text.as_bytes()).is_err());
        let text = format!("{}\n7,random,0,100,0.5,0,0,1,stalled\n", ROUNDS_HEADER.join(","));
        assert!(read_rounds_csv(text.as_bytes()).is_err());
    }
}
