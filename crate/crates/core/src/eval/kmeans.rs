//! K-means clustering with k-means++ seeding.
//!
//! Lloyd iterations run until the largest centroid displacement falls
//! below `1e-8` or 300 iterations elapse; the best of 10 seeded restarts
//! (lowest inertia) wins. Every tie — nearest-centroid, D² sampling
//! fallback, restart comparison — resolves to the lowest index, so a
//! fixed seed yields identical assignments on every run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::InstanceRepr;
use crate::error::{Error, Result};
use crate::num::Real;

/// Lloyd convergence threshold on centroid movement.
pub const MOVE_TOL: f64 = 1e-8;
/// Iteration cap per restart.
pub const MAX_ITERS: usize = 300;
/// Independent initializations per call.
pub const RESTARTS: usize = 10;

/// Clustering outcome.
#[derive(Debug, Clone)]
pub struct KmeansFit<T> {
    /// Cluster index per point.
    pub assignments: Vec<usize>,
    /// Row-major `k × dim` centroids.
    pub centroids: Vec<Vec<T>>,
    /// Sum of squared distances to assigned centroids.
    pub inertia: T,
    /// Assignment-phase inertia per Lloyd iteration of the winning restart.
    pub inertia_history: Vec<T>,
}

fn dist2<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(T::zero(), |acc, v| acc + v)
}

/// Chooses `k` starting centroids by D²-weighted sampling.
fn plus_plus_init<T: Real>(x: &InstanceRepr<T>, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    let n = x.n;
    let mut chosen: Vec<usize> = vec![rng.random_range(0..n)];
    let mut d2: Vec<T> = (0..n).map(|i| dist2(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total = d2.iter().fold(T::zero(), |acc, &v| acc + v);
        let next = if total <= T::zero() {
            // All remaining mass collapsed (duplicate points): take the
            // first index not yet chosen.
            (0..n)
                .find(|i| !chosen.contains(i))
                .expect("k <= n leaves an unchosen point")
        } else {
            let mut r = T::from(rng.random::<f64>()).unwrap() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= T::zero() {
                    continue;
                }
                if r < w {
                    pick = Some(i);
                    break;
                }
                r = r - w;
            }
            // Rounding can walk past the last bucket; take the final
            // positive-mass index.
            pick.unwrap_or_else(|| {
                (0..n)
                    .rev()
                    .find(|&i| d2[i] > T::zero())
                    .expect("total > 0 implies a positive bucket")
            })
        };
        chosen.push(next);
        for i in 0..n {
            let d = dist2(x.row(i), x.row(next));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    chosen.iter().map(|&i| x.row(i).to_vec()).collect()
}

fn assign<T: Real>(x: &InstanceRepr<T>, centroids: &[Vec<T>]) -> (Vec<usize>, T) {
    let mut labels = Vec::with_capacity(x.n);
    let mut inertia = T::zero();
    for i in 0..x.n {
        let row = x.row(i);
        let mut best = 0usize;
        let mut best_d = dist2(row, &centroids[0]);
        for (c, cent) in centroids.iter().enumerate().skip(1) {
            let d = dist2(row, cent);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels.push(best);
        inertia = inertia + best_d;
    }
    (labels, inertia)
}

/// Clusters rows of `x` into `k` groups.
pub fn kmeans<T: Real>(x: &InstanceRepr<T>, k: usize, seed: u64) -> Result<KmeansFit<T>> {
    if k < 1 {
        return Err(Error::param("k", "at least one cluster is required"));
    }
    if k > x.n {
        return Err(Error::param(
            "k",
            format!("{k} clusters exceed {} points", x.n),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let move_tol = T::from(MOVE_TOL).unwrap();
    let mut best: Option<KmeansFit<T>> = None;
    for _restart in 0..RESTARTS {
        let mut centroids = plus_plus_init(x, k, &mut rng);
        let mut history = Vec::new();
        loop {
            let (labels, inertia) = assign(x, &centroids);
            history.push(inertia);
            // Mean of each cluster's members; empty clusters hold position.
            let mut sums = vec![vec![T::zero(); x.k]; k];
            let mut counts = vec![0usize; k];
            for (i, &c) in labels.iter().enumerate() {
                counts[c] += 1;
                for (s, &v) in sums[c].iter_mut().zip(x.row(i)) {
                    *s = *s + v;
                }
            }
            let mut movement = T::zero();
            for c in 0..k {
                if counts[c] == 0 {
                    continue;
                }
                let inv = T::one() / T::from(counts[c]).unwrap();
                let fresh: Vec<T> = sums[c].iter().map(|&s| s * inv).collect();
                let moved = dist2(&fresh, &centroids[c]).sqrt();
                if moved > movement {
                    movement = moved;
                }
                centroids[c] = fresh;
            }
            if movement < move_tol || history.len() >= MAX_ITERS {
                break;
            }
        }
        let (final_labels, final_inertia) = assign(x, &centroids);
        let candidate = KmeansFit {
            assignments: final_labels,
            centroids,
            inertia: final_inertia,
            inertia_history: history,
        };
        if best.as_ref().map_or(true, |b| candidate.inertia < b.inertia) {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one restart ran"))
}
