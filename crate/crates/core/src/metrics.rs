//! Binary classification metrics and residual error curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, Matrix};
use crate::scalar::Scalar;
use crate::trainer::{BroadModel, TrainingTrace};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn tally<L: PartialEq>(predictions: &[L], labels: &[L], positive: &L) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                op: "binary_metrics",
                expected: format!("{} predictions", labels.len()),
                found: predictions.len().to_string(),
            });
        }
        if labels.is_empty() {
            return Err(Error::InvalidArgument("no samples to score".into()));
        }
        let mut c = ConfusionCounts::default();
        for (p, l) in predictions.iter().zip(labels) {
            match (p == positive, l == positive) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn metrics(&self) -> BinaryMetrics {
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        BinaryMetrics {
            accuracy: (self.tp + self.tn) as f64 / self.total() as f64,
            precision,
            recall,
            f1,
            fpr: ratio(self.fp, self.fp + self.tn),
            fnr: ratio(self.fn_, self.fn_ + self.tp),
            counts: *self,
        }
    }
}

/// Ratios with a zero denominator are `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub counts: ConfusionCounts,
}

pub fn binary_metrics<L: PartialEq>(predictions: &[L], labels: &[L], positive: &L) -> Result<BinaryMetrics> {
    Ok(ConfusionCounts::tally(predictions, labels, positive)?.metrics())
}

/// Column index of the largest output per row.
pub fn decide<T: Scalar>(outputs: &Matrix<T>) -> Vec<usize> {
    outputs.argmax_rows()
}

/// Share of rows where `argmax(outputs) == argmax(targets)`.
pub fn accuracy<T: Scalar>(outputs: &Matrix<T>, targets: &Matrix<T>) -> Result<f64> {
    if outputs.shape() != targets.shape() {
        return Err(Error::DimensionMismatch {
            op: "accuracy",
            expected: format!("{:?}", targets.shape()),
            found: format!("{:?}", outputs.shape()),
        });
    }
    let hits = decide(outputs)
        .iter()
        .zip(decide(targets))
        .filter(|(a, b)| **a == *b)
        .count();
    Ok(hits as f64 / outputs.rows() as f64)
}

/// Binary metrics from output scores and one-hot targets; class 1 is positive.
pub fn classification_metrics<T: Scalar>(outputs: &Matrix<T>, targets: &Matrix<T>) -> Result<BinaryMetrics> {
    if outputs.shape() != targets.shape() {
        return Err(Error::DimensionMismatch {
            op: "classification_metrics",
            expected: format!("{:?}", targets.shape()),
            found: format!("{:?}", outputs.shape()),
        });
    }
    binary_metrics(&decide(outputs), &decide(targets), &1)
}

/// `‖E_t‖` as recorded in the trace; `t = 0` is the initial residual.
pub fn training_error(trace: &TrainingTrace, t: usize) -> Result<f64> {
    let norms = trace.residual_norms();
    norms.get(t).copied().ok_or(Error::OutOfRange {
        index: t,
        len: norms.len(),
    })
}

/// `‖Y − predict_t(X)‖` using the first `t` residual layers.
pub fn testing_error<T: Scalar>(model: &BroadModel<T>, x: &Matrix<T>, y: &Matrix<T>, t: usize) -> Result<f64> {
    if t > model.layers.len() {
        return Err(Error::OutOfRange {
            index: t,
            len: model.layers.len() + 1,
        });
    }
    let pred = model.predict_depth(x, t)?;
    if pred.shape() != y.shape() {
        return Err(Error::DimensionMismatch {
            op: "testing_error",
            expected: format!("{:?}", pred.shape()),
            found: format!("{:?}", y.shape()),
        });
    }
    Ok(frobenius_norm(&y.sub(&pred)?).as_f64())
}

/// Errors for every depth `0..=m`.
pub fn error_curve<T: Scalar>(model: &BroadModel<T>, x: &Matrix<T>, y: &Matrix<T>) -> Result<Vec<f64>> {
    model
        .predict_curve(x)?
        .iter()
        .map(|p| Ok(frobenius_norm(&y.sub(p)?).as_f64()))
        .collect()
}
