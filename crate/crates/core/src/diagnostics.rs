//! Stagnation diagnostics for residual traces.
//!
//! If the per-layer relative decrease `ε_m` of the residual norm is summable,
//! the partial products `Π(1 − ε_j)` stay bounded away from zero and so does
//! `‖E_m‖ / ‖E_0‖`. The classic instance is `ε_j = 1/(4j²)`, whose product
//! converges to `2/π` (Wallis).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trainer::TrainingTrace;

/// Tail sums of ε below `ln(1/0.99)` move the residual by less than 1%.
pub fn stagnation_tail_threshold() -> f64 {
    (1.0f64 / 0.99).ln()
}

/// Above this many factors the product is accumulated as a sum of logs.
const LOG_SPACE_TERMS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Convergent,
    Stagnating,
    Inconclusive,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Convergent => "convergent",
            Regime::Stagnating => "stagnating",
            Regime::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductBound {
    pub value: f64,
    /// The product underflowed and was clamped to 0.
    pub underflow: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub epsilons: Vec<f64>,
    pub product_lower_bound: f64,
    pub product_underflow: bool,
    pub final_relative_residual: f64,
    /// Sum of ε over the last `horizon` layers.
    pub tail_epsilon_sum: f64,
    pub regime: Regime,
    /// Observed traces only give the tight per-layer ε, so the regime label
    /// comes from a tail-sum heuristic rather than a proof.
    pub heuristic: bool,
}

/// Observed relative decrease per layer, `1 − ‖E_m‖/‖E_{m−1}‖`. The sequence
/// stops at the first layer whose predecessor residual is zero.
pub fn epsilon_sequence(trace: &TrainingTrace) -> Result<Vec<f64>> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    epsilons_from_norms(&trace.residual_norms())
}

pub fn epsilons_from_norms(norms: &[f64]) -> Result<Vec<f64>> {
    if norms.len() < 2 {
        return Err(Error::EmptyTrace);
    }
    if let Some(bad) = norms.iter().position(|n| !n.is_finite()) {
        return Err(Error::InvalidArgument(format!("residual norm {bad} is not finite")));
    }
    Ok(norms
        .windows(2)
        .take_while(|w| w[0] > 0.0)
        .map(|w| 1.0 - w[1] / w[0])
        .collect())
}

/// `Π_j (1 − ε_j)`, multiplied in index order. Each `ε_j` must lie in `[0, 1)`.
pub fn stagnation_product(epsilons: &[f64]) -> Result<ProductBound> {
    if let Some((j, e)) = epsilons.iter().enumerate().find(|(_, e)| **e >= 1.0 || !e.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon[{j}] = {e} must be below 1")));
    }
    let value = if epsilons.len() > LOG_SPACE_TERMS {
        epsilons.iter().map(|e| (-e).ln_1p()).sum::<f64>().exp()
    } else {
        epsilons.iter().fold(1.0, |p, e| p * (1.0 - e))
    };
    let underflow = value == 0.0 || (value > 0.0 && !value.is_normal());
    Ok(ProductBound {
        value: if underflow { 0.0 } else { value },
        underflow,
    })
}

/// `ε_j = 1/(4j²)` for `j = 1..=m`.
pub fn wallis_epsilons(m: usize) -> Vec<f64> {
    (1..=m).map(|j| 1.0 / (4.0 * (j as f64).powi(2))).collect()
}

/// `Π_{j≤m} (1 − 1/(4j²))`.
pub fn wallis_product(m: usize) -> f64 {
    stagnation_product(&wallis_epsilons(m))
        .expect("wallis epsilons lie in [0, 1)")
        .value
}

/// Labels a residual-norm sequence `‖E_0‖, …, ‖E_m‖`.
///
/// Convergent when the final relative residual is below `tolerance`;
/// stagnating when the ε of the last `horizon` layers sum to less than
/// [`stagnation_tail_threshold`] while the residual is still above
/// `tolerance`; inconclusive otherwise, and always for single-layer runs.
pub fn classify_norms(norms: &[f64], tolerance: f64, horizon: usize) -> Result<ConvergenceReport> {
    let epsilons = epsilons_from_norms(norms)?;
    let clipped: Vec<f64> = epsilons.iter().map(|e| e.clamp(0.0, 1.0 - f64::EPSILON)).collect();
    let product = stagnation_product(&clipped)?;
    let initial = norms[0];
    let last = *norms.last().expect("non-empty");
    let final_relative_residual = if initial > 0.0 { last / initial } else { 0.0 };
    let h = horizon.max(1).min(epsilons.len());
    let tail_epsilon_sum: f64 = epsilons[epsilons.len() - h..].iter().map(|e| e.max(0.0)).sum();

    let regime = if norms.len() < 3 {
        Regime::Inconclusive
    } else if final_relative_residual < tolerance {
        Regime::Convergent
    } else if tail_epsilon_sum < stagnation_tail_threshold() {
        Regime::Stagnating
    } else {
        Regime::Inconclusive
    };
    let report = ConvergenceReport {
        epsilons,
        product_lower_bound: product.value,
        product_underflow: product.underflow,
        final_relative_residual,
        tail_epsilon_sum,
        regime,
        heuristic: true,
    };
    debug_assert!(report.final_relative_residual >= report.product_lower_bound - 1e-9 || initial == 0.0);
    Ok(report)
}

pub fn classify_regime(trace: &TrainingTrace, tolerance: f64, horizon: usize) -> Result<ConvergenceReport> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    classify_norms(&trace.residual_norms(), tolerance, horizon)
}

/// Residual norms that decrease by exactly `ε_j` at every step, starting at `initial`.
pub fn norms_from_epsilons(initial: f64, epsilons: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(epsilons.len() + 1);
    out.push(initial);
    let mut cur = initial;
    for e in epsilons {
        cur *= 1.0 - e;
        out.push(cur);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn epsilon_examples() {
        let e = epsilons_from_norms(&[10.0, 9.0, 8.1]).unwrap();
        assert!((e[0] - 0.1).abs() < 1e-15 && (e[1] - 0.1).abs() < 1e-15);
        assert_eq!(epsilons_from_norms(&[2.0, 2.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(epsilons_from_norms(&[2.0, 0.0, 0.0]).unwrap(), vec![1.0]);
        assert!(epsilon_sequence(&TrainingTrace::default()).is_err());
    }

    #[test]
    fn product_examples() {
        assert_eq!(stagnation_product(&[0.25]).unwrap().value, 0.75);
        let p = stagnation_product(&wallis_epsilons(2)).unwrap().value;
        assert!((p - 0.703125).abs() < 1e-15);
        assert!((wallis_product(10_000) - 2.0 / PI).abs() < 1e-4);
        assert!(stagnation_product(&[0.5, 1.0]).is_err());
        let tiny = stagnation_product(&vec![0.9; 400]).unwrap();
        assert!(tiny.underflow && tiny.value == 0.0);
    }

    #[test]
    fn wallis_partials_decrease_toward_limit() {
        let mut prev = 1.0;
        let mut p = 1.0;
        for e in wallis_epsilons(5000) {
            p *= 1.0 - e;
            assert!(p < prev && p > 2.0 / PI);
            prev = p;
        }
        // log-space branch agrees with direct multiplication
        let direct = wallis_epsilons(20_000).iter().fold(1.0, |a, e| a * (1.0 - e));
        assert!((wallis_product(20_000) - direct).abs() < 1e-12);
    }

    #[test]
    fn classification() {
        let norms = norms_from_epsilons(3.0, &wallis_epsilons(2000));
        let r = classify_norms(&norms, 1e-3, 100).unwrap();
        assert_eq!(r.regime, Regime::Stagnating);
        assert!((r.product_lower_bound - 2.0 / PI).abs() < 1e-3);
        assert!(r.final_relative_residual >= r.product_lower_bound - 1e-9);

        let fast = norms_from_epsilons(1.0, &[0.5; 30]);
        assert_eq!(classify_norms(&fast, 1e-6, 10).unwrap().regime, Regime::Convergent);
        assert_eq!(
            classify_norms(&[1.0, 0.5], 1e-6, 10).unwrap().regime,
            Regime::Inconclusive
        );
        let steady = norms_from_epsilons(1.0, &[0.05; 20]);
        assert_eq!(classify_norms(&steady, 1e-6, 10).unwrap().regime, Regime::Inconclusive);
    }
}
