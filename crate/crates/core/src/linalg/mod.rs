//! Dense linear algebra: norms, pseudo-inverse, ridge solve and the
//! projector diagnostics used by the supervisory gate.

mod matrix;
mod solve;
mod svd;

pub use matrix::Matrix;
pub use solve::{cholesky, cholesky_solve, lu_solve};
pub use svd::{singular_values, svd, SvdFactors};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Entrywise L2 norm, `sqrt(sum a_ij^2)`.
pub fn frobenius_norm<T: Scalar>(a: &Matrix<T>) -> T {
    a.as_slice().iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Induced 2-norm (largest singular value).
pub fn spectral_norm<T: Scalar>(a: &Matrix<T>) -> T {
    singular_values(a).first().copied().unwrap_or_else(T::zero)
}

/// Default rank cutoff `max(rows, cols) * eps * sigma_max`.
pub fn default_rank_tolerance<T: Scalar>(rows: usize, cols: usize, sigma_max: T) -> T {
    T::of(rows.max(cols) as f64) * T::epsilon() * sigma_max
}

/// Moore-Penrose pseudo-inverse via SVD truncation. Singular values at or
/// below `rank_tolerance` are treated as zero; a tolerance of zero selects
/// [`default_rank_tolerance`].
pub fn pseudo_inverse<T: Scalar>(a: &Matrix<T>, rank_tolerance: T) -> Matrix<T> {
    let f = svd(a);
    let smax = f.singular_values.first().copied().unwrap_or_else(T::zero);
    let tol = if rank_tolerance > T::zero() {
        rank_tolerance
    } else {
        default_rank_tolerance(a.rows(), a.cols(), smax)
    };
    let rank = f.singular_values.iter().take_while(|&&s| s > tol).count();
    if rank == 0 {
        return Matrix::zeros(a.cols(), a.rows());
    }
    // V_r diag(1/s) U_rᵀ
    let vs = Matrix::from_fn(a.cols(), rank, |i, j| f.vt[(j, i)] / f.singular_values[j]);
    let ut = Matrix::from_fn(rank, a.rows(), |i, j| f.u[(j, i)]);
    vs.matmul(&ut).expect("pinv factor shapes agree")
}

/// Ridge regression weights `(KᵀK + λI)⁻¹ KᵀE`.
///
/// The normal equations are factored with Cholesky; if rounding makes the
/// regularized Gram matrix lose definiteness the solve falls back to LU.
pub fn ridge_solve<T: Scalar>(k: &Matrix<T>, e: &Matrix<T>, lambda: T) -> Result<Matrix<T>> {
    if k.rows() != e.rows() {
        return Err(Error::DimensionMismatch {
            op: "ridge_solve",
            expected: format!("targets with {} rows", k.rows()),
            found: format!("{} rows", e.rows()),
        });
    }
    if lambda.is_nan() || lambda <= T::zero() {
        return Err(Error::InvalidArgument(format!(
            "ridge lambda must be positive, got {lambda}"
        )));
    }
    let mut gram = k.t_matmul(k)?;
    for i in 0..gram.rows() {
        gram[(i, i)] = gram[(i, i)] + lambda;
    }
    let rhs = k.t_matmul(e)?;
    match cholesky(&gram) {
        Some(l) => Ok(cholesky_solve(&l, &rhs)),
        None => lu_solve(&gram, &rhs),
    }
}

/// Least-squares weights `K⁺E` through the exact pseudo-inverse.
pub fn pinv_solve<T: Scalar>(k: &Matrix<T>, e: &Matrix<T>) -> Result<Matrix<T>> {
    if k.rows() != e.rows() {
        return Err(Error::DimensionMismatch {
            op: "pinv_solve",
            expected: format!("targets with {} rows", k.rows()),
            found: format!("{} rows", e.rows()),
        });
    }
    pseudo_inverse(k, T::zero()).matmul(e)
}

/// `‖I − K K⁺‖₂`. The argument is an orthogonal projector, so the value is
/// 0 when `K` has full row rank and 1 otherwise (up to rounding).
pub fn projector_complement_norm<T: Scalar>(k: &Matrix<T>) -> T {
    let p = k.matmul(&pseudo_inverse(k, T::zero())).expect("pinv shape matches");
    let comp = Matrix::identity(k.rows()).sub(&p).expect("square");
    spectral_norm(&comp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodegen::RandomStream;

    fn rel(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
        frobenius_norm(&a.sub(b).unwrap()) / frobenius_norm(b).max(1e-300)
    }

    #[test]
    fn frobenius_examples() {
        let a = Matrix::from_rows(&[[3.0, 4.0]]).unwrap();
        assert_eq!(frobenius_norm(&a), 5.0);
        assert_eq!(frobenius_norm(&Matrix::<f64>::zeros(4, 4)), 0.0);

        let r = RandomStream::new(11).uniform::<f64>(20, 7, -1.0, 1.0);
        let mut acc = 0.0;
        for i in 0..20 {
            for j in 0..7 {
                acc += r[(i, j)] * r[(i, j)];
            }
        }
        assert!((frobenius_norm(&r) - acc.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spectral_examples() {
        assert!((spectral_norm(&Matrix::<f64>::identity(5)) - 1.0).abs() < 1e-14);
        let d = Matrix::from_diagonal(&[3.0f64, 1.0]);
        assert!((spectral_norm(&d) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_matches_power_iteration() {
        let a = RandomStream::new(5).uniform::<f64>(30, 10, -1.0, 1.0);
        // power iteration on AᵀA
        let ata = a.t_matmul(&a).unwrap();
        let mut v = Matrix::from_fn(10, 1, |i, _| 1.0 + i as f64 * 0.1);
        let mut lambda = 0.0;
        for _ in 0..2000 {
            let w = ata.matmul(&v).unwrap();
            let n = frobenius_norm(&w);
            v = w.scale(1.0 / n);
            lambda = n;
        }
        let oracle = lambda.sqrt();
        let s = spectral_norm(&a);
        assert!((s - oracle).abs() / oracle < 1e-8, "{s} vs {oracle}");
    }

    #[test]
    fn pseudo_inverse_examples() {
        let i3 = Matrix::<f64>::identity(3);
        assert!(rel(&pseudo_inverse(&i3, 0.0), &i3) < 1e-15);

        // normal equations (AᵀA)⁻¹Aᵀ for a = [1;1]
        let a = Matrix::from_rows(&[[1.0], [1.0]]).unwrap();
        let oracle = Matrix::from_rows(&[[0.5, 0.5]]).unwrap();
        assert!(rel(&pseudo_inverse(&a, 0.0), &oracle) < 1e-15);

        let p = Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(rel(&pseudo_inverse(&p, 0.0), &p) < 1e-15);

        let z = Matrix::<f64>::zeros(2, 3);
        assert_eq!(pseudo_inverse(&z, 0.0).shape(), (3, 2));
        assert!(pseudo_inverse(&z, 0.0).is_zero());
    }

    #[test]
    fn ridge_examples() {
        let k = Matrix::<f64>::identity(2);
        let e = Matrix::from_rows(&[[1.0], [0.0]]).unwrap();
        let w = ridge_solve(&k, &e, 1e-8).unwrap();
        assert!((w[(0, 0)] - 1.0 / (1.0 + 1e-8)).abs() < 1e-15);
        assert!((w[(0, 0)] - 1.0).abs() < 1e-7 && w[(1, 0)] == 0.0);

        let z = Matrix::<f64>::zeros(5, 3);
        let e = RandomStream::new(1).uniform::<f64>(5, 2, -1.0, 1.0);
        assert!(ridge_solve(&z, &e, 1e-8).unwrap().is_zero());

        assert!(ridge_solve(&z, &Matrix::zeros(4, 1), 1e-8).is_err());
        assert!(ridge_solve(&z, &e, 0.0).is_err());
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn ridge_matches_gaussian_elimination() {
        let mut rng = RandomStream::new(9);
        let k = rng.uniform::<f64>(40, 8, -1.0, 1.0);
        let e = rng.uniform::<f64>(40, 2, -1.0, 1.0);
        let lambda = 1e-8;
        // naive elimination without pivot reordering tricks, independent of lu_solve
        let mut a = vec![vec![0.0; 8 + 2]; 8];
        for i in 0..8 {
            for j in 0..8 {
                a[i][j] = (0..40).map(|r| k[(r, i)] * k[(r, j)]).sum::<f64>();
            }
            a[i][i] += lambda;
            for c in 0..2 {
                a[i][8 + c] = (0..40).map(|r| k[(r, i)] * e[(r, c)]).sum::<f64>();
            }
        }
        for col in 0..8 {
            let piv = (col..8)
                .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
                .unwrap();
            a.swap(col, piv);
            for r in 0..8 {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for j in col..10 {
                        a[r][j] -= f * a[col][j];
                    }
                }
            }
        }
        let w = ridge_solve(&k, &e, lambda).unwrap();
        for i in 0..8 {
            for c in 0..2 {
                let oracle = a[i][8 + c] / a[i][i];
                assert!((w[(i, c)] - oracle).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ridge_approaches_pinv() {
        let mut rng = RandomStream::new(17);
        let k = rng.uniform::<f64>(30, 6, -1.0, 1.0);
        let e = rng.uniform::<f64>(30, 2, -1.0, 1.0);
        let w_ridge = ridge_solve(&k, &e, 1e-12).unwrap();
        let w_pinv = pinv_solve(&k, &e).unwrap();
        assert!(frobenius_norm(&w_ridge.sub(&w_pinv).unwrap()) < 1e-6);
    }

    #[test]
    fn projector_examples() {
        assert!(projector_complement_norm(&Matrix::<f64>::identity(4)).abs() < 1e-12);
        let mut rng = RandomStream::new(2);
        let tall = rng.uniform::<f64>(4, 2, -1.0, 1.0);
        assert!((projector_complement_norm(&tall) - 1.0).abs() < 1e-8);
        let wide = rng.uniform::<f64>(3, 5, -1.0, 1.0);
        let kkp = wide.matmul(&pseudo_inverse(&wide, 0.0)).unwrap();
        assert!(rel(&kkp, &Matrix::identity(3)) < 1e-12);
        assert!(projector_complement_norm(&wide).abs() < 1e-8);
    }
}
