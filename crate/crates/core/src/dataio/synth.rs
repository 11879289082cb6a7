use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{one_hot, Dataset};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Two interleaved arcs, one per class, in `dims` dimensions (2 to 10).
///
/// Class 0 lies on `(cos t, sin t)`, class 1 on `(1 − cos t, −sin t − 1/4)`
/// with `t ∈ [0, π]`; dimensions past the second carry noise only. Rows
/// alternate classes so the balance is exact. Isotropic Gaussian noise of
/// standard deviation `noise` is added to every coordinate; at `noise = 0`
/// the line `x₂ = −1/8` separates the classes.
pub fn synth_classification<T: Scalar>(seed: u64, n: usize, noise: f64, dims: usize) -> Result<Dataset<T>> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 samples, got {n}")));
    }
    if !(2..=10).contains(&dims) {
        return Err(Error::InvalidArgument(format!("dims must be in 2..=10, got {dims}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise {noise} must be non-negative")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n * dims);
    let mut classes = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let t = PI * rng.random::<f64>();
        let (a, b) = if class == 0 {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), -t.sin() - 0.25)
        };
        for d in 0..dims {
            let clean = match d {
                0 => a,
                1 => b,
                _ => 0.0,
            };
            let eps: f64 = StandardNormal.sample(&mut rng);
            x.push(T::of(clean + noise * eps));
        }
        classes.push(class);
    }
    let mut ds = Dataset::new(Matrix::from_vec(n, dims, x)?, one_hot(&classes, 2)?)?;
    ds.label_names = Some(vec!["0".into(), "1".into()]);
    Ok(ds)
}

/// Smooth regression targets on `[0, 1]^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SynthTarget {
    /// Mean over coordinates of `sin 2πx + ½ sin(6πx + 0.3) + ¼ cos 10πx`.
    SineMix,
    /// Three Gaussian bumps centred on the diagonal at ¼, ½, ¾.
    BumpMix,
    Constant(f64),
}

impl SynthTarget {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match *self {
            SynthTarget::SineMix => {
                x.iter()
                    .map(|&v| (2.0 * PI * v).sin() + 0.5 * (6.0 * PI * v + 0.3).sin() + 0.25 * (10.0 * PI * v).cos())
                    .sum::<f64>()
                    / x.len() as f64
            }
            SynthTarget::BumpMix => {
                const BUMPS: [(f64, f64); 3] = [(0.25, 1.0), (0.5, -0.7), (0.75, 0.5)];
                const WIDTH: f64 = 0.1;
                BUMPS
                    .iter()
                    .map(|&(c, a)| {
                        let d2: f64 = x.iter().map(|v| (v - c).powi(2)).sum();
                        a * (-d2 / (2.0 * WIDTH * WIDTH)).exp()
                    })
                    .sum()
            }
            SynthTarget::Constant(c) => c,
        }
    }
}

impl std::str::FromStr for SynthTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "sine-mix" | "sine" => Ok(SynthTarget::SineMix),
            "bump-mix" | "bump" => Ok(SynthTarget::BumpMix),
            other => match other.strip_prefix("constant:").map(str::parse::<f64>) {
                Some(Ok(c)) => Ok(SynthTarget::Constant(c)),
                _ => Err(Error::InvalidArgument(format!("unknown target '{s}'"))),
            },
        }
    }
}

/// `x` uniform on `[0, 1]^dims`, one target column.
pub fn synth_regression<T: Scalar>(seed: u64, n: usize, target: SynthTarget, dims: usize) -> Result<Dataset<T>> {
    if n < 10 {
        return Err(Error::InvalidArgument(format!("need at least 10 samples, got {n}")));
    }
    if dims == 0 {
        return Err(Error::InvalidArgument("dims must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..n * dims).map(|_| rng.random::<f64>()).collect();
    let y: Vec<T> = raw.chunks(dims).map(|row| T::of(target.evaluate(row))).collect();
    Dataset::new(
        Matrix::from_vec(n, dims, raw.into_iter().map(T::of).collect())?,
        Matrix::from_vec(n, 1, y)?,
    )
}

/// `points` evenly spaced values on `[0, 1]` as a column, with the target evaluated there.
pub fn uniform_grid<T: Scalar>(points: usize, target: SynthTarget) -> Result<Dataset<T>> {
    if points < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 points".into()));
    }
    let xs: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let y = xs.iter().map(|&v| T::of(target.evaluate(&[v]))).collect();
    Dataset::new(
        Matrix::from_vec(points, 1, xs.into_iter().map(T::of).collect())?,
        Matrix::from_vec(points, 1, y)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a: Dataset<f64> = synth_classification(3, 50, 0.2, 4).unwrap();
        let b: Dataset<f64> = synth_classification(3, 50, 0.2, 4).unwrap();
        assert_eq!(a, b);
        let c: Dataset<f64> = synth_regression(3, 50, SynthTarget::BumpMix, 2).unwrap();
        assert_eq!(c, synth_regression(3, 50, SynthTarget::BumpMix, 2).unwrap());
    }

    #[test]
    fn class_balance() {
        let ds: Dataset<f64> = synth_classification(11, 400, 0.2, 2).unwrap();
        let ones = ds.class_indices().iter().filter(|&&c| c == 1).count();
        assert!((180..=220).contains(&ones));
    }

    #[test]
    fn noiseless_classes_separate_on_second_axis() {
        let ds: Dataset<f64> = synth_classification(5, 200, 0.0, 3).unwrap();
        for (i, c) in ds.class_indices().into_iter().enumerate() {
            let side = ds.x[(i, 1)] > -0.125;
            assert_eq!(side, c == 0);
        }
    }

    #[test]
    fn regression_targets() {
        let ds: Dataset<f64> = synth_regression(1, 20, SynthTarget::Constant(2.5), 3).unwrap();
        assert!(ds.y.as_slice().iter().all(|&v| v == 2.5));
        assert!(ds.x.as_slice().iter().all(|&v| (0.0..1.0).contains(&v)));

        let grid: Dataset<f64> = uniform_grid(5, SynthTarget::SineMix).unwrap();
        let closed = |v: f64| (2.0 * PI * v).sin() + 0.5 * (6.0 * PI * v + 0.3).sin() + 0.25 * (10.0 * PI * v).cos();
        for i in 0..5 {
            let v = i as f64 / 4.0;
            assert!((grid.y[(i, 0)] - closed(v)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(synth_classification::<f64>(0, 3, 0.1, 2).is_err());
        assert!(synth_classification::<f64>(0, 10, 0.1, 11).is_err());
        assert!(synth_regression::<f64>(0, 9, SynthTarget::SineMix, 1).is_err());
    }
}
