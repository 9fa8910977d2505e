//! Small dense kernels not provided directly by nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Orthonormal basis for the column span of `m` (thin Householder QR).
pub fn orthonormalize<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    let cols = m.ncols();
    let q = m.qr().q();
    q.columns(0, cols).into_owned()
}

/// Least-squares solve of `a x ≈ b` by Householder QR with column pivoting.
///
/// Pivoting picks the remaining column of largest norm at every step, so the
/// diagonal of `R` is non-increasing in magnitude and reveals numerical rank.
/// A rank-deficient `a` is an error, never a minimum-norm solution.
pub fn lstsq_pivoted<T: Real>(a: &DMatrix<T>, b: &DVector<T>) -> Result<DVector<T>> {
    let (n, p) = a.shape();
    assert_eq!(n, b.len(), "lstsq: row mismatch");
    if n < p {
        return Err(Error::TooFewSamples { needed: p, got: n });
    }
    let mut r = a.clone();
    let mut qtb = b.clone();
    let mut perm: Vec<usize> = (0..p).collect();

    for k in 0..p {
        let (mut best, mut best_norm) = (k, -T::one());
        for j in k..p {
            let nrm = r.view((k, j), (n - k, 1)).norm_squared();
            if nrm > best_norm {
                best = j;
                best_norm = nrm;
            }
        }
        if best != k {
            r.swap_columns(k, best);
            perm.swap(k, best);
        }

        let xnorm = best_norm.sqrt();
        if xnorm == T::zero() {
            return Err(Error::RankDeficientFit {
                rank: k,
                columns: p,
            });
        }
        let x0 = r[(k, k)];
        let alpha = if x0 >= T::zero() { -xnorm } else { xnorm };
        let mut v: DVector<T> = r.column(k).rows(k, n - k).clone_owned();
        v[0] -= alpha;
        let vnorm2 = v.norm_squared();
        if vnorm2 > T::zero() {
            let two = T::lit(2.0);
            for j in k..p {
                let mut col = r.column_mut(j);
                let mut col = col.rows_mut(k, n - k);
                let s = v.dot(&col) * two / vnorm2;
                col.axpy(-s, &v, T::one());
            }
            let mut tail = qtb.rows_mut(k, n - k);
            let s = v.dot(&tail) * two / vnorm2;
            tail.axpy(-s, &v, T::one());
        }
        r[(k, k)] = alpha;
        for i in (k + 1)..n {
            r[(i, k)] = T::zero();
        }
    }

    let lead = r[(0, 0)].abs();
    let tol = lead * T::default_epsilon() * T::from_usize_lossy(n.max(p)) * T::lit(10.0);
    if let Some(rank) = (0..p).find(|&k| r[(k, k)].abs() <= tol) {
        return Err(Error::RankDeficientFit { rank, columns: p });
    }

    let mut z = DVector::zeros(p);
    for i in (0..p).rev() {
        let mut acc = qtb[i];
        for j in (i + 1)..p {
            acc -= r[(i, j)] * z[j];
        }
        z[i] = acc / r[(i, i)];
    }
    let mut x = DVector::zeros(p);
    for (k, &col) in perm.iter().enumerate() {
        x[col] = z[k];
    }
    Ok(x)
}

/// Solution of a symmetric positive-definite system and a condition estimate.
pub struct SpdSolve<T: Real> {
    pub x: DVector<T>,
    /// `‖A‖_F · ‖A⁻¹‖_F`, an upper bound on the 2-norm condition number.
    pub condition: T,
}

/// Cholesky solve of `a x = b`; `None` when `a` is not numerically SPD.
pub fn spd_solve<T: Real>(a: &DMatrix<T>, b: &DVector<T>) -> Option<SpdSolve<T>> {
    let chol = Cholesky::new(a.clone())?;
    let x = chol.solve(b);
    let condition = a.norm() * chol.inverse().norm();
    if !condition.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(SpdSolve { x, condition })
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
///
/// Each eigenvector is sign-normalized so its largest-magnitude entry is
/// positive; the first such entry wins on exact magnitude ties.
pub fn symmetric_eigen_desc<T: Real>(c: &DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let m = c.nrows();
    let eig = SymmetricEigen::new(c.clone());
    let mut order: Vec<usize> = (0..m).collect();
    // stable sort keeps solver order on ties
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut values = DVector::zeros(m);
    let mut vectors = DMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        let mut col = eig.eigenvectors.column(src).clone_owned();
        let mut pivot = 0;
        for i in 1..m {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < T::zero() {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let x_true = DVector::from_vec(vec![0.5, -2.0]);
        let b = &a * &x_true;
        let x = lstsq_pivoted(&a, &b).unwrap();
        assert_relative_eq!(x, x_true, epsilon = 1e-12);
    }

    #[test]
    fn lstsq_matches_normal_equations() {
        let a = DMatrix::from_fn(20, 3, |i, j| {
            ((i * 7 + j * 3) % 11) as f64 - 5.0 + j as f64 * 0.1
        });
        let b = DVector::from_fn(20, |i, _| (i as f64).sin());
        let x = lstsq_pivoted(&a, &b).unwrap();
        let ata = a.transpose() * &a;
        let atb = a.transpose() * &b;
        let x_ne = ata.cholesky().unwrap().solve(&atb);
        assert_relative_eq!(x, x_ne, epsilon = 1e-9);
    }

    #[test]
    fn lstsq_rejects_collinear_columns() {
        let a = DMatrix::from_fn(10, 3, |i, j| match j {
            0 => 1.0,
            1 => i as f64,
            _ => 2.0 * i as f64 + 3.0,
        });
        let b = DVector::from_element(10, 1.0);
        assert!(matches!(
            lstsq_pivoted(&a, &b),
            Err(Error::RankDeficientFit {
                rank: 2,
                columns: 3
            })
        ));
    }

    #[test]
    fn eigen_sorted_and_sign_normalized() {
        let c = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0]);
        let (vals, vecs) = symmetric_eigen_desc(&c);
        assert_relative_eq!(vals[0], 5.0, epsilon = 1e-12);
        assert_relative_eq!(vals[1], 3.0, epsilon = 1e-12);
        assert_relative_eq!(vals[2], 1.0, epsilon = 1e-12);
        for k in 0..3 {
            let col = vecs.column(k);
            let big = col.iter().cloned().fold(
                0.0f64,
                |m: f64, v: f64| if v.abs() > m.abs() { v } else { m },
            );
            assert!(big > 0.0);
        }
    }

    #[test]
    fn spd_solve_reports_condition() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-6]));
        let s = spd_solve(&a, &DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_relative_eq!(s.x[1], 1e6, max_relative = 1e-12);
        assert!(s.condition >= 1e6);
        let indefinite = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(spd_solve(&indefinite, &DVector::from_vec(vec![1.0, 1.0])).is_none());
    }
}
