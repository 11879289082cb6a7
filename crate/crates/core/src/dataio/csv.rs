use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use super::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::trainer::{LayerRecord, TrainingTrace};

/// Which columns hold targets.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetColumns {
    /// The trailing `n` columns.
    Last(usize),
    /// 0-based column indices.
    Indices(Vec<usize>),
    /// Header names; requires `has_header`.
    Names(Vec<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    /// A single label column, one-hot encoded.
    Categorical,
    /// Real-valued targets copied as is.
    Numeric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvSchema {
    pub targets: TargetColumns,
    pub target_kind: TargetKind,
    pub has_header: bool,
    pub delimiter: u8,
    /// Fixed class list for categorical targets, in one-hot column order.
    /// Rows with any other label are rejected. When absent the sorted set of
    /// labels found in the file is used.
    pub labels: Option<Vec<String>>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            targets: TargetColumns::Last(1),
            target_kind: TargetKind::Categorical,
            has_header: true,
            delimiter: b',',
            labels: None,
        }
    }
}

fn csv_err(line: u64, message: impl Into<String>) -> Error {
    Error::Csv {
        line,
        message: message.into(),
    }
}

fn from_csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            csv_err(line, format!("expected {expected_len} fields, found {len}"))
        }
        other => csv_err(line, format!("{other:?}")),
    }
}

/// Numeric-looking labels sort by value, anything else lexicographically.
fn sort_labels(labels: &mut [String]) {
    let numeric: Option<Vec<f64>> = labels.iter().map(|l| l.trim().parse::<f64>().ok()).collect();
    match numeric {
        Some(_) => labels.sort_by(|a, b| {
            let (x, y) = (a.trim().parse::<f64>().unwrap(), b.trim().parse::<f64>().unwrap());
            x.total_cmp(&y)
        }),
        None => labels.sort(),
    }
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset<T>> {
    load_csv_from(File::open(path)?, schema)
}

pub(crate) fn load_csv_from<T: Scalar, R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset<T>> {
    let mut rdr = ReaderBuilder::new()
        .has_headers(schema.has_header)
        .delimiter(schema.delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = if schema.has_header {
        Some(rdr.headers().map_err(from_csv_error)?.clone())
    } else {
        None
    };
    let mut rows: Vec<(u64, StringRecord)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(from_csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        rows.push((line, rec));
    }
    let width = rows
        .first()
        .map(|(_, r)| r.len())
        .ok_or_else(|| csv_err(1, "file contains no data rows"))?;

    let target_idx: Vec<usize> = match &schema.targets {
        TargetColumns::Last(n) if *n >= 1 && *n < width => (width - n..width).collect(),
        TargetColumns::Last(n) => return Err(csv_err(1, format!("cannot take {n} target columns from {width}"))),
        TargetColumns::Indices(ix) => ix.clone(),
        TargetColumns::Names(names) => {
            let header = header
                .as_ref()
                .ok_or_else(|| csv_err(1, "target names need a header row"))?;
            names
                .iter()
                .map(|n| {
                    header
                        .iter()
                        .position(|h| h == n)
                        .ok_or_else(|| csv_err(1, format!("no column named '{n}'")))
                })
                .collect::<Result<_>>()?
        }
    };
    if target_idx.is_empty() || target_idx.iter().any(|&i| i >= width) {
        return Err(csv_err(
            1,
            format!("target columns {target_idx:?} out of range for {width} columns"),
        ));
    }
    if target_idx.len() >= width {
        return Err(csv_err(1, "no feature columns left"));
    }
    if schema.target_kind == TargetKind::Categorical && target_idx.len() != 1 {
        return Err(csv_err(1, "categorical targets need exactly one label column"));
    }
    let feature_idx: Vec<usize> = (0..width).filter(|i| !target_idx.contains(i)).collect();

    let parse = |line: u64, col: usize, s: &str| -> Result<T> {
        let v: f64 = s
            .parse()
            .map_err(|_| csv_err(line, format!("column {}: '{s}' is not a number", col + 1)))?;
        if !v.is_finite() {
            return Err(csv_err(line, format!("column {}: non-finite value", col + 1)));
        }
        Ok(T::of(v))
    };

    let n = rows.len();
    let mut x = Vec::with_capacity(n * feature_idx.len());
    for (line, rec) in &rows {
        for &j in &feature_idx {
            x.push(parse(*line, j, &rec[j])?);
        }
    }
    let x = Matrix::from_vec(n, feature_idx.len(), x)?;

    match schema.target_kind {
        TargetKind::Numeric => {
            let mut y = Vec::with_capacity(n * target_idx.len());
            for (line, rec) in &rows {
                for &j in &target_idx {
                    y.push(parse(*line, j, &rec[j])?);
                }
            }
            Dataset::new(x, Matrix::from_vec(n, target_idx.len(), y)?)
        }
        TargetKind::Categorical => {
            let col = target_idx[0];
            let names = match &schema.labels {
                Some(fixed) => fixed.clone(),
                None => {
                    let mut names: Vec<String> = rows.iter().map(|(_, r)| r[col].to_string()).collect();
                    sort_labels(&mut names);
                    names.dedup();
                    names
                }
            };
            let classes: Vec<usize> = rows
                .iter()
                .map(|(line, r)| {
                    names
                        .iter()
                        .position(|l| l == &r[col])
                        .ok_or_else(|| csv_err(*line, format!("unknown label '{}'", &r[col])))
                })
                .collect::<Result<_>>()?;
            let mut ds = Dataset::new(x, super::one_hot(&classes, names.len())?)?;
            ds.label_names = Some(names);
            Ok(ds)
        }
    }
}

/// Writes features then targets as numeric columns with a header
/// (`x1..xM`, `y1..yc`). Values use the shortest exact decimal form, so
/// loading with `TargetColumns::Last(c)` and `TargetKind::Numeric` gives
/// bit-identical matrices.
pub fn write_dataset_csv<T: Scalar>(ds: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = WriterBuilder::new().from_path(path).map_err(from_csv_error)?;
    let header: Vec<String> = (1..=ds.x.cols())
        .map(|j| format!("x{j}"))
        .chain((1..=ds.y.cols()).map(|j| format!("y{j}")))
        .collect();
    w.write_record(&header).map_err(from_csv_error)?;
    for i in 0..ds.len() {
        let row: Vec<String> =
            ds.x.row(i)
                .iter()
                .chain(ds.y.row(i))
                .map(|v| format!("{}", v))
                .collect();
        w.write_record(&row).map_err(from_csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(trace: &TrainingTrace, writer: impl Write) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    for r in &trace.records {
        w.serialize(r).map_err(from_csv_error)?;
    }
    if trace.is_empty() {
        w.write_record(TRACE_COLUMNS).map_err(from_csv_error)?;
    }
    w.flush()?;
    Ok(())
}

const TRACE_COLUMNS: &[&str] = &[
    "layer",
    "kind",
    "rows",
    "residual_norm_before",
    "residual_norm_after",
    "contraction_ratio",
    "gate_value",
    "gamma",
    "mu",
    "threshold",
    "retries_used",
    "accepted",
    "exhausted",
    "gated",
    "wall_time",
];

pub fn read_trace_csv(reader: impl Read) -> Result<TrainingTrace> {
    let mut rdr = ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let records = rdr
        .deserialize::<LayerRecord>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(from_csv_error)?;
    Ok(TrainingTrace { records })
}
