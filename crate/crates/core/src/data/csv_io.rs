use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::Dataset;
use crate::partition::Labels;
use crate::{Error, Result, Scalar};

const LABEL_COLUMN: &str = "label";
const TRUE_CLASS_COLUMN: &str = "true_class";

/// Reads a dataset CSV: a header row, feature columns (every column other
/// than `label` and `true_class`, in file order), an optional `label` column
/// of non-negative integers and an optional `true_class` column.
pub fn read_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>> {
    read_csv_from(File::open(path)?)
}

pub fn read_csv_from<T: Scalar, R: Read>(reader: R) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let label_col = header.iter().position(|h| h == LABEL_COLUMN);
    let truth_col = header.iter().position(|h| h == TRUE_CLASS_COLUMN);
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&j| Some(j) != label_col && Some(j) != truth_col)
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::Parse {
            row: 1,
            column: String::new(),
            message: "no feature columns in header".into(),
        });
    }

    let mut x = Vec::new();
    let mut labels = Vec::new();
    let mut truth = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        // 1-based file line, header is line 1
        let row = r + 2;
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for &j in &feature_cols {
            let cell = &record[j];
            let v: f64 = cell.parse().map_err(|_| parse_err(row, &header[j], cell))?;
            if !v.is_finite() {
                return Err(parse_err(row, &header[j], cell));
            }
            x.push(T::lit(v));
        }
        if let Some(j) = label_col {
            labels.push(record[j].parse::<u32>().map_err(|_| parse_err(row, &header[j], &record[j]))?);
        }
        if let Some(j) = truth_col {
            truth.push(record[j].parse::<u32>().map_err(|_| parse_err(row, &header[j], &record[j]))?);
        }
    }

    let mut ds = Dataset::from_row_major(x, feature_cols.len())?;
    ds.feature_names = feature_cols.iter().map(|&j| header[j].clone()).collect();
    if label_col.is_some() {
        ds = ds.with_labels(Labels::new(labels))?;
    }
    if truth_col.is_some() {
        ds = ds.with_true_labels(truth)?;
    }
    Ok(ds)
}

fn parse_err(row: usize, column: &str, cell: &str) -> Error {
    Error::Parse {
        row,
        column: column.to_owned(),
        message: format!("invalid value `{cell}`"),
    }
}

/// Writes the dataset in the format [`read_csv`] accepts. Values use the
/// shortest decimal form that parses back to the identical float.
pub fn write_dataset_csv<T: Scalar>(path: impl AsRef<Path>, ds: &Dataset<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    let mut header: Vec<String> = ds.feature_names.clone();
    if ds.labels.is_some() {
        header.push(LABEL_COLUMN.into());
    }
    if ds.true_labels.is_some() {
        header.push(TRUE_CLASS_COLUMN.into());
    }
    w.write_record(&header)?;
    for i in 0..ds.n() {
        let mut rec: Vec<String> = ds.row(i).iter().map(|v| v.as_f64().to_string()).collect();
        if let Some(y) = &ds.labels {
            rec.push(y.get(i).to_string());
        }
        if let Some(t) = &ds.true_labels {
            rec.push(t[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Contents of an assignment CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentRows {
    pub cluster_id: Vec<usize>,
    pub mapped_label: Vec<u32>,
}

/// Writes `index,cluster_id,mapped_label`, one row per point.
pub fn write_assignments(path: impl AsRef<Path>, cluster_id: &[usize], mapped_label: &[u32]) -> Result<()> {
    if cluster_id.len() != mapped_label.len() {
        return Err(Error::LengthMismatch {
            left: cluster_id.len(),
            right: mapped_label.len(),
        });
    }
    let mut out = std::io::BufWriter::new(File::create(path)?);
    writeln!(out, "index,cluster_id,mapped_label")?;
    for (i, (c, q)) in cluster_id.iter().zip(mapped_label).enumerate() {
        writeln!(out, "{i},{c},{q}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_assignments(path: impl AsRef<Path>) -> Result<AssignmentRows> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            row: 1,
            column: name.into(),
            message: "missing column".into(),
        })
    };
    let (ci, cc, cm) = (col("index")?, col("cluster_id")?, col("mapped_label")?);
    let mut rows = AssignmentRows {
        cluster_id: Vec::new(),
        mapped_label: Vec::new(),
    };
    for (r, record) in rdr.records().enumerate() {
        let row = r + 2;
        let record = record?;
        let idx: usize = record[ci].parse().map_err(|_| parse_err(row, "index", &record[ci]))?;
        if idx != r {
            return Err(parse_err(row, "index", &record[ci]));
        }
        rows.cluster_id
            .push(record[cc].parse().map_err(|_| parse_err(row, "cluster_id", &record[cc]))?);
        rows.mapped_label
            .push(record[cm].parse().map_err(|_| parse_err(row, "mapped_label", &record[cm]))?);
    }
    Ok(rows)
}
