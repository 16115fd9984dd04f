//! Two-component PCA for representation scatter plots.
//!
//! Mean-centers the rows, eigen-decomposes the sample covariance with
//! Jacobi rotations, and projects onto the top two eigenvectors. Each
//! component's sign is fixed so its largest-magnitude loading is
//! positive, making projections reproducible across runs.

use super::InstanceRepr;
use crate::error::{Error, Result};
use crate::linalg::eigh_symmetric;
use crate::num::Real;

/// Output dimensionality of the projection.
pub const DIMS: usize = 2;

#[derive(Debug, Clone)]
pub struct Projection<T> {
    /// Row-major `n × 2` coordinates.
    pub coords: Vec<T>,
    /// Fraction of total variance captured by each component.
    pub explained: [T; 2],
}

/// Projects `x` onto its top two principal components.
pub fn pca_project<T: Real>(x: &InstanceRepr<T>) -> Result<Projection<T>> {
    if x.n < DIMS {
        return Err(Error::param(
            "pca",
            format!("{} rows cannot support {DIMS} components", x.n),
        ));
    }
    if x.k < DIMS {
        return Err(Error::param(
            "pca",
            format!("{} feature columns cannot support {DIMS} components", x.k),
        ));
    }
    let n = x.n;
    let k = x.k;
    let nf = T::from(n).unwrap();
    let mut mean = vec![T::zero(); k];
    for i in 0..n {
        for (m, &v) in mean.iter_mut().zip(x.row(i)) {
            *m = *m + v;
        }
    }
    for m in &mut mean {
        *m = *m / nf;
    }
    let centered: Vec<T> = (0..n)
        .flat_map(|i| {
            x.row(i)
                .iter()
                .zip(&mean)
                .map(|(&v, &m)| v - m)
                .collect::<Vec<T>>()
        })
        .collect();

    // Sample covariance (n − 1 denominator).
    let denom = T::from(n - 1).unwrap();
    let mut cov = vec![vec![T::zero(); k]; k];
    for row in centered.chunks_exact(k) {
        for a in 0..k {
            for b in a..k {
                cov[a][b] = cov[a][b] + row[a] * row[b];
            }
        }
    }
    for a in 0..k {
        for b in a..k {
            let v = cov[a][b] / denom;
            cov[a][b] = v;
            cov[b][a] = v;
        }
    }

    let (vals, vecs) = eigh_symmetric(cov);
    // Eigenvector j is column j; flip it if its dominant loading is negative.
    let mut components = [vec![T::zero(); k], vec![T::zero(); k]];
    for (j, comp) in components.iter_mut().enumerate() {
        for (r, slot) in comp.iter_mut().enumerate() {
            *slot = vecs[r][j];
        }
        let dominant = comp
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| {
                a.abs()
                    .partial_cmp(&b.abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        if comp[dominant] < T::zero() {
            for v in comp.iter_mut() {
                *v = -*v;
            }
        }
    }

    let mut coords = Vec::with_capacity(n * DIMS);
    for row in centered.chunks_exact(k) {
        for comp in &components {
            let dot = row
                .iter()
                .zip(comp)
                .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
            coords.push(dot);
        }
    }

    let positive_total = vals
        .iter()
        .map(|&v| v.max(T::zero()))
        .fold(T::zero(), |a, b| a + b);
    let explained = if positive_total > T::zero() {
        [
            vals[0].max(T::zero()) / positive_total,
            vals[1].max(T::zero()) / positive_total,
        ]
    } else {
        [T::zero(), T::zero()]
    };
    Ok(Projection { coords, explained })
}
