//! Thin singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! Jacobi is slower than Golub-Kahan for large square inputs but gives small
//! singular values to high relative accuracy, which matters for the rank
//! decisions inside the pseudo-inverse.

use crate::linalg::Matrix;
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 80;

/// `a = u * diag(singular_values) * vt` with `k = min(rows, cols)`.
#[derive(Clone, Debug)]
pub struct SvdFactors<T> {
    /// `rows x k`, orthonormal columns.
    pub u: Matrix<T>,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<T>,
    /// `k x cols`, orthonormal rows.
    pub vt: Matrix<T>,
}

impl<T: Scalar> SvdFactors<T> {
    pub fn reconstruct(&self) -> Matrix<T> {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (v, &s) in us.row_mut(i).iter_mut().zip(&self.singular_values) {
                *v = *v * s;
            }
        }
        us.matmul(&self.vt).expect("svd factor shapes agree")
    }
}

/// Full thin SVD of `a`.
pub fn svd<T: Scalar>(a: &Matrix<T>) -> SvdFactors<T> {
    if a.rows() >= a.cols() {
        let (u_cols, s, v_cols) = jacobi_tall(a, true);
        SvdFactors {
            u: from_columns(a.rows(), &u_cols),
            singular_values: s,
            vt: from_columns(a.cols(), &v_cols.expect("requested")).transpose(),
        }
    } else {
        // aᵀ = U S Vᵀ  =>  a = V S Uᵀ
        let (u_cols, s, v_cols) = jacobi_tall(&a.transpose(), true);
        SvdFactors {
            u: from_columns(a.rows(), &v_cols.expect("requested")),
            singular_values: s,
            vt: from_columns(a.cols(), &u_cols).transpose(),
        }
    }
}

/// Singular values only, non-increasing.
pub fn singular_values<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    if a.rows() >= a.cols() {
        jacobi_tall(a, false).1
    } else {
        jacobi_tall(&a.transpose(), false).1
    }
}

fn from_columns<T: Scalar>(rows: usize, cols: &[Vec<T>]) -> Matrix<T> {
    Matrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Orthogonalizes the columns of a tall matrix. Returns normalized left
/// vectors, sorted singular values and (optionally) right vectors, all as
/// column lists.
#[allow(clippy::type_complexity)]
fn jacobi_tall<T: Scalar>(a: &Matrix<T>, want_v: bool) -> (Vec<Vec<T>>, Vec<T>, Option<Vec<Vec<T>>>) {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Option<Vec<Vec<T>>> = want_v.then(|| {
        (0..n)
            .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
            .collect()
    });
    let eps = T::epsilon();
    let mut norms: Vec<T> = cols.iter().map(|c| dot(c, c)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha.is_zero() || beta.is_zero() {
                    continue;
                }
                let gamma = dot(&cols[p], &cols[q]);
                if gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let two = T::one() + T::one();
                let zeta = (beta - alpha) / (two * gamma);
                let t = zeta.signum() / (zeta.abs() + T::one().hypot(zeta));
                let c = T::one() / T::one().hypot(t);
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                if let Some(v) = v.as_mut() {
                    rotate(v, p, q, c, s);
                }
                norms[p] = dot(&cols[p], &cols[p]);
                norms[q] = dot(&cols[q], &cols[q]);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<T> = norms.iter().map(|x| x.sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).expect("finite singular values"));

    let mut u: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut zero_slots = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        let s = sigma[j];
        if s > T::zero() {
            u.push(cols[j].iter().map(|&x| x / s).collect());
        } else {
            zero_slots.push(slot);
            u.push(vec![T::zero(); m]);
        }
    }
    complete_basis(&mut u, &zero_slots);
    let v = v.map(|v| order.iter().map(|&j| v[j].clone()).collect());
    sigma = order.iter().map(|&j| sigma[j]).collect();
    (u, sigma, v)
}

fn rotate<T: Scalar>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills zero columns at `slots` with unit vectors orthogonal to every other
/// column (Gram-Schmidt on the standard basis, applied twice).
fn complete_basis<T: Scalar>(u: &mut [Vec<T>], slots: &[usize]) {
    if slots.is_empty() {
        return;
    }
    let m = u[0].len();
    let half = T::of(0.5);
    let mut filled: Vec<bool> = u.iter().map(|c| c.iter().any(|x| !x.is_zero())).collect();
    let mut next_e = 0;
    for &slot in slots {
        while next_e < m {
            let mut cand = vec![T::zero(); m];
            cand[next_e] = T::one();
            next_e += 1;
            for _ in 0..2 {
                for (j, col) in u.iter().enumerate() {
                    if !filled[j] {
                        continue;
                    }
                    let d = dot(col, &cand);
                    for (c, &x) in cand.iter_mut().zip(col) {
                        *c = *c - d * x;
                    }
                }
            }
            let norm = dot(&cand, &cand).sqrt();
            if norm > half {
                u[slot] = cand.into_iter().map(|x| x / norm).collect();
                filled[slot] = true;
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius_norm;
    use crate::nodegen::RandomStream;

    fn check(a: &Matrix<f64>) {
        let f = svd(a);
        let err = frobenius_norm(&f.reconstruct().sub(a).unwrap());
        assert!(err <= 1e-10 * frobenius_norm(a).max(1e-300), "reconstruction {err}");
        for w in f.singular_values.windows(2) {
            assert!(w[0] >= w[1] && w[1] >= 0.0);
        }
        let k = f.singular_values.len();
        let utu = f.u.t_matmul(&f.u).unwrap();
        let vvt = f.vt.matmul(&f.vt.transpose()).unwrap();
        let eye = Matrix::identity(k);
        assert!(frobenius_norm(&utu.sub(&eye).unwrap()) < 1e-10);
        assert!(frobenius_norm(&vvt.sub(&eye).unwrap()) < 1e-10);
    }

    #[test]
    fn tall_wide_and_rank_deficient() {
        let mut rng = RandomStream::new(3);
        check(&rng.uniform::<f64>(12, 5, -1.0, 1.0));
        check(&rng.uniform::<f64>(4, 9, -1.0, 1.0));
        let b = rng.uniform::<f64>(10, 2, -1.0, 1.0);
        let c = rng.uniform::<f64>(2, 6, -1.0, 1.0);
        check(&b.matmul(&c).unwrap());
        check(&Matrix::<f64>::zeros(3, 3));
    }

    #[test]
    fn diagonal_values() {
        let a = Matrix::from_rows(&[[0.0f64, 1.0], [3.0, 0.0]]).unwrap();
        let s = singular_values(&a);
        assert!((s[0] - 3.0).abs() < 1e-15 && (s[1] - 1.0).abs() < 1e-15);
    }
}
