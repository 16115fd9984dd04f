//! Small dense linear-algebra helpers used by the smoother and PCA.
//!
//! The systems solved here are tiny (polynomial normal equations, the
//! covariance of a low-dimensional embedding), so straightforward
//! elimination and Jacobi rotations are plenty and keep results fully
//! deterministic.

use crate::num::Real;

/// Solves `a · x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when the matrix is numerically singular.
pub(crate) fn solve<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    for col in 0..n {
        // Pivot on the largest remaining magnitude in this column.
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() <= T::epsilon() * T::from(n).unwrap() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col][k];
                a[row][k] = a[row][k] - f * v;
            }
            let bv = b[col];
            b[row] = b[row] - f * bv;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc = acc - a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns
/// (`vecs[i][j]` is component `i` of eigenvector `j`), sorted by descending
/// eigenvalue.
pub(crate) fn eigh_symmetric<T: Real>(mut a: Vec<Vec<T>>) -> (Vec<T>, Vec<Vec<T>>) {
    let n = a.len();
    let mut v = vec![vec![T::zero(); n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    let tol = T::epsilon() * T::from(100).unwrap();
    for _sweep in 0..100 {
        // Total off-diagonal magnitude decides convergence.
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + a[i][j].abs();
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= tol * T::from(1e-3).unwrap() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::from(2).unwrap() * a[p][q]);
                let t = {
                    let sign = if theta < T::zero() { -T::one() } else { T::one() };
                    sign / (theta.abs() + (T::one() + theta * theta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j][j]
            .partial_cmp(&a[i][i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&i| a[i][i]).collect();
    let vecs = (0..n)
        .map(|row| order.iter().map(|&col| v[row][col]).collect())
        .collect();
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_recovers_known_solution() {
        let a = vec![vec![2.0f64, 1.0], vec![1.0, 3.0]];
        let b = vec![5.0, 10.0];
        let x = solve(a, b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn solve_reports_singular() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve(a, vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn solve_handles_permuted_pivots() {
        // Leading zero forces a row swap.
        let a = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let x = solve(a, vec![3.0, 7.0]).unwrap();
        assert_eq!(x, vec![7.0, 3.0]);
    }

    #[test]
    fn eigh_diagonalizes_a_known_matrix() {
        // [[2,1],[1,2]] has eigenpairs (3, [1,1]/√2) and (1, [1,-1]/√2).
        let (vals, vecs) = eigh_symmetric(vec![vec![2.0f64, 1.0], vec![1.0, 2.0]]);
        assert!((vals[0] - 3.0).abs() < 1e-10);
        assert!((vals[1] - 1.0).abs() < 1e-10);
        let ratio = vecs[0][0] / vecs[1][0];
        assert!((ratio - 1.0).abs() < 1e-8, "first eigenvector not ∝ [1,1]");
    }

    #[test]
    fn eigh_returns_orthonormal_vectors() {
        let m = vec![
            vec![4.0f64, 1.0, 0.5],
            vec![1.0, 3.0, 0.25],
            vec![0.5, 0.25, 2.0],
        ];
        let (vals, vecs) = eigh_symmetric(m.clone());
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
        for a in 0..3 {
            for b in 0..3 {
                let dot: f64 = (0..3).map(|i| vecs[i][a] * vecs[i][b]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9, "v{a}·v{b} = {dot}");
            }
        }
        // Reconstruction: m = V diag(vals) Vᵀ.
        for i in 0..3 {
            for j in 0..3 {
                let mij: f64 = (0..3).map(|k| vecs[i][k] * vals[k] * vecs[j][k]).sum();
                assert!((mij - m[i][j]).abs() < 1e-9);
            }
        }
    }
}
