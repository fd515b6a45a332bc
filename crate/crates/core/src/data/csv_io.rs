// SPDX-License-Identifier: Apache-2.0

//! Numeric CSV datasets: header `f0,...,fk,label`.

use super::{DataError, Dataset, Result};
use ndarray::Array2;
use std::io::{Read, Write};

pub fn read_csv_dataset<R: Read>(reader: R, num_classes: Option<usize>) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(|e| DataError::Csv(e.to_string()))?.clone();
    let width = headers.len();
    if width < 2 || &headers[width - 1] != "label" {
        return Err(DataError::Csv("header must be f0,...,fk,label".into()));
    }
    for (j, h) in headers.iter().take(width - 1).enumerate() {
        if h != format!("f{j}") {
            return Err(DataError::Csv(format!("column {j} is named {h:?}, expected f{j}")));
        }
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        for j in 0..width - 1 {
            let v: f64 = record[j]
                .trim()
                .parse()
                .map_err(|_| DataError::Csv(format!("row {row} column f{j}: {:?}", &record[j])))?;
            values.push(v);
        }
        let label: usize = record[width - 1]
            .trim()
            .parse()
            .map_err(|_| DataError::Csv(format!("row {row}: label {:?} is not a class index", &record[width - 1])))?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(DataError::Empty);
    }
    let num_classes = num_classes.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
    let features = Array2::from_shape_vec((labels.len(), width - 1), values)
        .map_err(|e| DataError::Shape(e.to_string()))?;
    Dataset::new(features, labels, num_classes)
}

pub fn write_csv_dataset<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..ds.dim()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(|e| DataError::Csv(e.to_string()))?;
    for (i, row) in ds.features().rows().into_iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        rec.push(ds.labels()[i].to_string());
        w.write_record(&rec).map_err(|e| DataError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| DataError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_and_writes() {
        let text = "f0,f1,label\n0.5,1,0\n-2,3.25,2\n";
        let ds = read_csv_dataset(text.as_bytes(), None).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.num_classes(), 3);
        let mut buf = Vec::new();
        write_csv_dataset(&ds, &mut buf).unwrap();
        assert_eq!(read_csv_dataset(buf.as_slice(), Some(3)).unwrap(), ds);
    }

    #[test]
    fn rejects_bad_labels_and_headers() {
        assert!(read_csv_dataset("f0,label\n1,-1\n".as_bytes(), None).is_err());
        assert!(read_csv_dataset("f0,label\n1,0.5\n".as_bytes(), None).is_err());
        assert!(read_csv_dataset("f0,label\n1,4\n".as_bytes(), Some(3)).is_err());
        assert!(read_csv_dataset("x,label\n1,0\n".as_bytes(), None).is_err());
    }
}
