//! Datasets, normalization, synthetic generators and persistence.

mod archive;
mod csv;
mod synth;

pub use self::archive::{load_archive, load_model, save_archive, save_model, ModelArchive, ARCHIVE_VERSION};
pub use self::csv::{
    load_csv, read_trace_csv, write_dataset_csv, write_trace_csv, CsvSchema, TargetColumns, TargetKind,
};
pub use self::synth::{synth_classification, synth_regression, uniform_grid, SynthTarget};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    /// `N x M` inputs.
    pub x: Matrix<T>,
    /// `N x c` targets, one-hot for classification.
    pub y: Matrix<T>,
    /// Class names by target column, for categorical targets.
    pub label_names: Option<Vec<String>>,
    /// Transform already applied to `x`.
    pub normalization: Option<Normalization>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(x: Matrix<T>, y: Matrix<T>) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::DimensionMismatch {
                op: "dataset",
                expected: format!("{} target rows", x.rows()),
                found: y.rows().to_string(),
            });
        }
        Ok(Self {
            x,
            y,
            label_names: None,
            normalization: None,
        })
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Ok(Self {
            x: self.x.select_rows(idx)?,
            y: self.y.select_rows(idx)?,
            label_names: self.label_names.clone(),
            normalization: self.normalization.clone(),
        })
    }

    /// Rows `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        self.select(&(start..end).collect::<Vec<_>>())
    }

    /// Seeded shuffle, then the first `round(train_fraction · N)` rows train.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction {train_fraction} must be in (0, 1)"
            )));
        }
        let n = self.len();
        let n_train = ((n as f64) * train_fraction).round() as usize;
        if n_train == 0 || n_train == n {
            return Err(Error::InvalidArgument(format!(
                "cannot split {n} rows at {train_fraction}"
            )));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok((self.select(&idx[..n_train])?, self.select(&idx[n_train..])?))
    }

    /// Class index per row (argmax of the target row).
    pub fn class_indices(&self) -> Vec<usize> {
        self.y.argmax_rows()
    }
}

/// Conventional 7:3 train/test ratio.
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    /// Each column onto `[0, 1]`.
    #[default]
    Minmax,
    /// Zero mean, unit (population) variance.
    Zscore,
    None,
}

impl NormalizeMode {
    pub fn name(self) -> &'static str {
        match self {
            NormalizeMode::Minmax => "minmax",
            NormalizeMode::Zscore => "zscore",
            NormalizeMode::None => "none",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            NormalizeMode::Minmax => 0,
            NormalizeMode::Zscore => 1,
            NormalizeMode::None => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(NormalizeMode::Minmax),
            1 => Some(NormalizeMode::Zscore),
            2 => Some(NormalizeMode::None),
            _ => None,
        }
    }
}

impl std::str::FromStr for NormalizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minmax" | "minmax_to_unit" => Ok(NormalizeMode::Minmax),
            "zscore" => Ok(NormalizeMode::Zscore),
            "none" => Ok(NormalizeMode::None),
            other => Err(Error::InvalidArgument(format!("unknown normalization '{other}'"))),
        }
    }
}

/// Per-column affine map `x' = (x − shift) · factor + offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mode: NormalizeMode,
    pub shift: Vec<f64>,
    pub factor: Vec<f64>,
    pub offset: Vec<f64>,
}

impl Normalization {
    /// Fits the transform on the columns of `x`. Constant columns map to
    /// 0.5 under min-max and to 0 under z-score.
    pub fn fit<T: Scalar>(x: &Matrix<T>, mode: NormalizeMode) -> Self {
        let cols = x.cols();
        let n = x.rows() as f64;
        let mut shift = vec![0.0; cols];
        let mut factor = vec![1.0; cols];
        let mut offset = vec![0.0; cols];
        for j in 0..cols {
            let col: Vec<f64> = x.column(j).into_iter().map(T::as_f64).collect();
            match mode {
                NormalizeMode::Minmax => {
                    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    shift[j] = lo;
                    if hi > lo {
                        factor[j] = 1.0 / (hi - lo);
                    } else {
                        factor[j] = 0.0;
                        offset[j] = 0.5;
                    }
                }
                NormalizeMode::Zscore => {
                    let mean = col.iter().sum::<f64>() / n;
                    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    shift[j] = mean;
                    factor[j] = if var > 0.0 { 1.0 / var.sqrt() } else { 0.0 };
                }
                NormalizeMode::None => {}
            }
        }
        Self {
            mode,
            shift,
            factor,
            offset,
        }
    }

    pub fn apply<T: Scalar>(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if x.cols() != self.shift.len() {
            return Err(Error::DimensionMismatch {
                op: "normalize",
                expected: format!("{} columns", self.shift.len()),
                found: x.cols().to_string(),
            });
        }
        if self.mode == NormalizeMode::None {
            return Ok(x.clone());
        }
        Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            T::of((x[(i, j)].as_f64() - self.shift[j]) * self.factor[j] + self.offset[j])
        }))
    }
}

/// Fits `mode` on `ds.x`, transforms it and records the transform.
pub fn normalize<T: Scalar>(ds: &Dataset<T>, mode: NormalizeMode) -> Dataset<T> {
    let norm = Normalization::fit(&ds.x, mode);
    let x = norm.apply(&ds.x).expect("transform fitted on the same columns");
    Dataset {
        x,
        y: ds.y.clone(),
        label_names: ds.label_names.clone(),
        normalization: Some(norm),
    }
}

/// One-hot encodes class indices into `n x classes`.
pub fn one_hot<T: Scalar>(classes: &[usize], n_classes: usize) -> Result<Matrix<T>> {
    if let Some(&c) = classes.iter().find(|&&c| c >= n_classes) {
        return Err(Error::OutOfRange {
            index: c,
            len: n_classes,
        });
    }
    Ok(Matrix::from_fn(classes.len(), n_classes, |i, j| {
        if classes[i] == j {
            T::one()
        } else {
            T::zero()
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn minmax_examples() {
        let x = Matrix::from_rows(&[[0.0, 3.0], [10.0, 3.0], [5.0, 3.0]]).unwrap();
        let ds = normalize(&Dataset::new(x, Matrix::zeros(3, 1)).unwrap(), NormalizeMode::Minmax);
        assert_eq!(ds.x.column(0), vec![0.0, 1.0, 0.5]);
        assert_eq!(ds.x.column(1), vec![0.5; 3]);
    }

    #[test]
    fn zscore_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data: Vec<f64> = (0..10_000)
            .map(|_| 3.0 + 2.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let x = Matrix::from_vec(10_000, 1, data).unwrap();
        let norm = Normalization::fit(&x, NormalizeMode::Zscore);
        let z = norm.apply(&x).unwrap().into_vec();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / z.len() as f64;
        assert!(mean.abs() < 0.05 && (var - 1.0).abs() < 0.05);
        let constant = Matrix::from_vec(3, 1, vec![2.0; 3]).unwrap();
        assert_eq!(
            Normalization::fit(&constant, NormalizeMode::Zscore)
                .apply(&constant)
                .unwrap()
                .into_vec(),
            vec![0.0; 3]
        );
    }

    #[test]
    fn split_partitions_rows() {
        let x = Matrix::from_fn(10, 1, |i, _| i as f64);
        let ds = Dataset::new(x.clone(), x).unwrap();
        let (a, b) = ds.split(0.7, 1).unwrap();
        assert_eq!((a.len(), b.len()), (7, 3));
        let mut all: Vec<f64> = a.x.into_vec().into_iter().chain(b.x.into_vec()).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..10).map(f64::from).collect::<Vec<_>>());
        assert!(ds.split(1.0, 1).is_err());
    }

    #[test]
    fn one_hot_rows() {
        let y: Matrix<f64> = one_hot(&[1, 0, 2], 3).unwrap();
        assert_eq!(y.row(0), &[0.0, 1.0, 0.0]);
        assert!(one_hot::<f64>(&[3], 3).is_err());
    }
}
