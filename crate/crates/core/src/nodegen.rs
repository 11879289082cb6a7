//! Random parameter generation and node construction.
//!
//! Every model build consumes one ChaCha stream in a fixed order: feature
//! groups by index (weights, then bias), then enhancement layers by index
//! (weights, then bias), with rejected candidates consuming fresh values.
//! Persisting the stream position is what lets an incremental update
//! reproduce a from-scratch run exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Seed and sampling interval for random weights and biases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomSpec {
    pub seed: u64,
    pub low: f64,
    pub high: f64,
}

impl RandomSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            low: -1.0,
            high: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.low >= self.high || !self.low.is_finite() || !self.high.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "random interval [{}, {}] is empty",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self::new(0)
    }
}

/// Deterministic uniform stream with a resumable position.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Reopens a stream at a position previously returned by [`cursor`](Self::cursor).
    pub fn resume(seed: u64, cursor: u128) -> Self {
        let mut s = Self::new(seed);
        s.rng.set_word_pos(cursor);
        s
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cursor(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Next `f64` uniform on `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// `rows x cols` matrix of i.i.d. draws on `[low, high)`, row-major.
    pub fn uniform<T: Scalar>(&mut self, rows: usize, cols: usize, low: f64, high: f64) -> Matrix<T> {
        let width = high - low;
        Matrix::from_fn(rows, cols, |_, _| T::of(low + width * self.next_unit()))
    }

    pub fn draw<T: Scalar>(&mut self, sampling: &RandomSpec, rows: usize, cols: usize) -> Matrix<T> {
        self.uniform(rows, cols, sampling.low, sampling.high)
    }
}

/// Draws from a fresh stream seeded by `sampling.seed`.
pub fn draw_uniform<T: Scalar>(sampling: &RandomSpec, rows: usize, cols: usize) -> Matrix<T> {
    RandomStream::new(sampling.seed).draw(sampling, rows, cols)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ActivationId {
    #[default]
    Sigmoid,
    Tanh,
    Identity,
}

impl ActivationId {
    pub fn name(self) -> &'static str {
        match self {
            ActivationId::Sigmoid => "sigmoid",
            ActivationId::Tanh => "tanh",
            ActivationId::Identity => "identity",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            ActivationId::Sigmoid => 0,
            ActivationId::Tanh => 1,
            ActivationId::Identity => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(ActivationId::Sigmoid),
            1 => Some(ActivationId::Tanh),
            2 => Some(ActivationId::Identity),
            _ => None,
        }
    }

    #[inline]
    pub fn eval<T: Scalar>(self, x: T) -> T {
        match self {
            ActivationId::Sigmoid => T::one() / (T::one() + (-x).exp()),
            ActivationId::Tanh => x.tanh(),
            ActivationId::Identity => x,
        }
    }
}

impl std::str::FromStr for ActivationId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(ActivationId::Sigmoid),
            "tanh" => Ok(ActivationId::Tanh),
            "identity" | "linear" => Ok(ActivationId::Identity),
            other => Err(Error::InvalidArgument(format!("unknown activation '{other}'"))),
        }
    }
}

pub fn apply_activation<T: Scalar>(a: &Matrix<T>, act: ActivationId) -> Matrix<T> {
    match act {
        ActivationId::Identity => a.clone(),
        _ => a.map(|x| act.eval(x)),
    }
}

/// One group of feature nodes `φ(X W_e + β_e)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureGroup<T> {
    /// `M x k`
    pub w_e: Matrix<T>,
    /// `1 x k`
    pub beta_e: Matrix<T>,
    pub activation: ActivationId,
}

impl<T: Scalar> FeatureGroup<T> {
    pub fn draw(rng: &mut RandomStream, sampling: &RandomSpec, input_dim: usize, k: usize, act: ActivationId) -> Self {
        let w_e = rng.draw(sampling, input_dim, k);
        let beta_e = rng.draw(sampling, 1, k);
        Self {
            w_e,
            beta_e,
            activation: act,
        }
    }

    pub fn width(&self) -> usize {
        self.w_e.cols()
    }
}

/// One group of enhancement nodes `ξ(Z W_h + β_h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnhancementGroup<T> {
    /// `feature width x q`
    pub w_h: Matrix<T>,
    /// `1 x q`
    pub beta_h: Matrix<T>,
    pub activation: ActivationId,
}

impl<T: Scalar> EnhancementGroup<T> {
    pub fn draw(rng: &mut RandomStream, sampling: &RandomSpec, feature_width: usize, q: usize, act: ActivationId) -> Self {
        let w_h = rng.draw(sampling, feature_width, q);
        let beta_h = rng.draw(sampling, 1, q);
        Self {
            w_h,
            beta_h,
            activation: act,
        }
    }

    pub fn width(&self) -> usize {
        self.w_h.cols()
    }

    pub fn input_width(&self) -> usize {
        self.w_h.rows()
    }
}

fn affine_activate<T: Scalar>(
    x: &Matrix<T>,
    w: &Matrix<T>,
    b: &Matrix<T>,
    act: ActivationId,
    op: &'static str,
) -> Result<Matrix<T>> {
    if x.cols() != w.rows() {
        return Err(Error::DimensionMismatch {
            op,
            expected: format!("{} input columns", w.rows()),
            found: format!("{} columns", x.cols()),
        });
    }
    let pre = x.matmul(w)?.add_row_broadcast(b)?;
    Ok(apply_activation(&pre, act))
}

pub fn make_feature_nodes<T: Scalar>(x: &Matrix<T>, group: &FeatureGroup<T>) -> Result<Matrix<T>> {
    affine_activate(x, &group.w_e, &group.beta_e, group.activation, "make_feature_nodes")
}

pub fn make_enhancement_nodes<T: Scalar>(z: &Matrix<T>, group: &EnhancementGroup<T>) -> Result<Matrix<T>> {
    affine_activate(z, &group.w_h, &group.beta_h, group.activation, "make_enhancement_nodes")
}

pub fn concat_columns<T: Scalar>(parts: &[&Matrix<T>]) -> Result<Matrix<T>> {
    Matrix::hstack(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draw() {
        let sampling = RandomSpec::new(42);
        let a: Matrix<f64> = draw_uniform(&sampling, 7, 3);
        let b: Matrix<f64> = draw_uniform(&sampling, 7, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_moments() {
        let sampling = RandomSpec::new(7);
        let a: Matrix<f64> = draw_uniform(&sampling, 1000, 100);
        let n = 1e5;
        let mean = a.as_slice().iter().sum::<f64>() / n;
        let var = a.as_slice().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.02, "{mean}");
        assert!((var - 1.0 / 3.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn narrow_interval_containment() {
        let sampling = RandomSpec {
            seed: 3,
            low: 0.5 - 1e-9,
            high: 0.5,
        };
        let a: Matrix<f64> = draw_uniform(&sampling, 50, 50);
        assert!(a.as_slice().iter().all(|&x| x >= sampling.low && x <= sampling.high));
    }

    #[test]
    fn resume_matches_continuation() {
        let mut s = RandomStream::new(5);
        let _: Matrix<f64> = s.uniform(3, 3, -1.0, 1.0);
        let cur = s.cursor();
        let next: Matrix<f64> = s.uniform(2, 4, -1.0, 1.0);
        let mut r = RandomStream::resume(5, cur);
        assert_eq!(next, r.uniform::<f64>(2, 4, -1.0, 1.0));
    }

    #[test]
    fn activations() {
        assert_eq!(ActivationId::Sigmoid.eval(0.0f64), 0.5);
        let a = Matrix::from_rows(&[[1.5, -2.0]]).unwrap();
        assert_eq!(apply_activation(&a, ActivationId::Identity), a);
        for x in [10.0f64, 15.0, 40.0] {
            assert!((ActivationId::Tanh.eval(x) - 1.0).abs() < 1e-6);
            assert!((ActivationId::Tanh.eval(-x) + 1.0).abs() < 1e-6);
            assert!((ActivationId::Tanh.eval(x) - x.tanh()).abs() == 0.0);
        }
        let s = apply_activation(&Matrix::from_rows(&[[-5.0, 0.3, 8.0]]).unwrap(), ActivationId::Sigmoid);
        assert!(s.as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn feature_nodes_cases() {
        let mut rng = RandomStream::new(1);
        let sampling = RandomSpec::new(1);
        let mut g = FeatureGroup::<f64>::draw(&mut rng, &sampling, 3, 4, ActivationId::Sigmoid);
        g.beta_e = Matrix::zeros(1, 4);
        let z = make_feature_nodes(&Matrix::zeros(5, 3), &g).unwrap();
        assert!(z.as_slice().iter().all(|&v| v == 0.5));

        let x = rng.uniform::<f64>(6, 3, -1.0, 1.0);
        g.activation = ActivationId::Identity;
        assert_eq!(make_feature_nodes(&x, &g).unwrap(), x.matmul(&g.w_e).unwrap());

        // scalar-loop oracle
        g = FeatureGroup::draw(&mut rng, &sampling, 3, 4, ActivationId::Sigmoid);
        let z = make_feature_nodes(&x, &g).unwrap();
        for i in 0..6 {
            for j in 0..4 {
                let mut s = g.beta_e[(0, j)];
                for p in 0..3 {
                    s += x[(i, p)] * g.w_e[(p, j)];
                }
                assert!((z[(i, j)] - 1.0 / (1.0 + (-s).exp())).abs() < 1e-12);
            }
        }
        assert!(make_feature_nodes(&Matrix::zeros(2, 4), &g).is_err());
    }

    #[test]
    fn enhancement_nodes_cases() {
        let mut rng = RandomStream::new(2);
        let sampling = RandomSpec::new(2);
        let mut g = EnhancementGroup::<f64>::draw(&mut rng, &sampling, 5, 3, ActivationId::Sigmoid);
        let zero_bias = Matrix::zeros(1, 3);
        let saved = std::mem::replace(&mut g.beta_h, zero_bias);
        assert!(make_enhancement_nodes(&Matrix::zeros(4, 5), &g)
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 0.5));
        g.beta_h = saved;
        let z = rng.uniform::<f64>(4, 5, -1.0, 1.0);
        g.activation = ActivationId::Identity;
        let h = make_enhancement_nodes(&z, &g).unwrap();
        assert_eq!(h, z.matmul(&g.w_h).unwrap().add_row_broadcast(&g.beta_h).unwrap());
        g.activation = ActivationId::Tanh;
        let h = make_enhancement_nodes(&z, &g).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                let mut s = g.beta_h[(0, j)];
                for p in 0..5 {
                    s += z[(i, p)] * g.w_h[(p, j)];
                }
                assert!((h[(i, j)] - s.tanh()).abs() < 1e-12);
            }
        }
        assert!(make_enhancement_nodes(&Matrix::zeros(4, 2), &g).is_err());
    }

    #[test]
    fn concat_cases() {
        let mut rng = RandomStream::new(4);
        let a = rng.uniform::<f64>(2, 1, -1.0, 1.0);
        assert_eq!(concat_columns(&[&a]).unwrap(), a);
        let parts: Vec<Matrix<f64>> = (1..5).map(|w| rng.uniform(3, w, -1.0, 1.0)).collect();
        let refs: Vec<&Matrix<f64>> = parts.iter().collect();
        let c = concat_columns(&refs).unwrap();
        assert_eq!(c.cols(), 1 + 2 + 3 + 4);
        // index map oracle
        let mut offset = 0;
        for p in &parts {
            for i in 0..3 {
                for j in 0..p.cols() {
                    assert_eq!(c[(i, offset + j)], p[(i, j)]);
                }
            }
            offset += p.cols();
        }
        assert!(concat_columns(&[&a, &Matrix::zeros(3, 1)]).is_err());
    }
}
