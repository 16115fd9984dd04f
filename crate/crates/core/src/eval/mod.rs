//! Downstream evaluation of learned representations.
//!
//! An instance is summarized by its final valid timestep's vector; the
//! resulting `N × K` matrix feeds three protocols:
//!
//! * classification — one-vs-rest RBF SVM ([`svm`]) trained on labeled
//!   instances, scored by exact-match accuracy;
//! * clustering — k-means ([`kmeans`]) with as many clusters as distinct
//!   test labels, scored by NMI and ARI ([`metrics`]);
//! * structure — an MI-vs-cluster-count sweep and a two-component PCA
//!   projection ([`pca`]) for plotting.

pub mod kmeans;
pub mod metrics;
pub mod pca;
pub mod svm;

use crate::encoder::ReprSeq;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::Scalar;

/// Dense row-major matrix of per-instance vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRepr<T> {
    pub n: usize,
    pub k: usize,
    pub rows: Vec<T>,
}

impl<T: Real> InstanceRepr<T> {
    pub fn new(n: usize, k: usize, rows: Vec<T>) -> Result<Self> {
        if rows.len() != n * k {
            return Err(Error::ShapeMismatch {
                left: vec![rows.len()],
                right: vec![n, k],
            });
        }
        if n == 0 || k == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(InstanceRepr { n, k, rows })
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i * self.k..(i + 1) * self.k]
    }
}

/// Takes each sequence's last vector as the instance representation.
pub fn extract_instance_repr<T: Real>(seqs: &[ReprSeq<T>]) -> Result<InstanceRepr<T>> {
    if seqs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = seqs[0].dim;
    let mut rows = Vec::with_capacity(seqs.len() * k);
    for (i, s) in seqs.iter().enumerate() {
        if s.dim != k {
            return Err(Error::ShapeMismatch {
                left: vec![s.len, s.dim],
                right: vec![s.len, k],
            });
        }
        if s.len == 0 {
            return Err(Error::InvalidTrajectory {
                id: i.to_string(),
                reason: "empty representation sequence".into(),
            });
        }
        rows.extend_from_slice(&s.rows[(s.len - 1) * k..s.len * k]);
    }
    InstanceRepr::new(seqs.len(), k, rows)
}

/// Classification + clustering scores for one train/test split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalScores {
    pub acc: Scalar,
    pub nmi: Scalar,
    pub ari: Scalar,
}

/// Runs the full protocol: SVM accuracy on the test labels, then k-means
/// (k = distinct test labels) NMI/ARI on the test instances.
pub fn evaluate<T: Real>(
    train: &InstanceRepr<T>,
    train_labels: &[i32],
    test: &InstanceRepr<T>,
    test_labels: &[i32],
    c: T,
    gamma: Option<T>,
    seed: u64,
) -> Result<EvalScores> {
    if test_labels.len() != test.n {
        return Err(Error::LengthMismatch {
            left: test.n,
            right: test_labels.len(),
        });
    }
    let model = svm::svm_rbf_fit(train, train_labels, c, gamma)?;
    let pred = svm::svm_rbf_predict(&model, test)?;
    let acc = svm::accuracy(&pred, test_labels)?;

    let mut classes = test_labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let fit = kmeans::kmeans(test, classes.len(), seed)?;
    let assigned: Vec<i32> = fit.assignments.iter().map(|&a| a as i32).collect();
    Ok(EvalScores {
        acc,
        nmi: metrics::nmi(&assigned, test_labels)?,
        ari: metrics::ari(&assigned, test_labels)?,
    })
}

/// Mutual information of k-means assignments against the labels, for k
/// from `k_min` to `k_max` in `step` increments (same seed at every k).
pub fn mi_sweep<T: Real>(
    x: &InstanceRepr<T>,
    labels: &[i32],
    k_min: usize,
    k_max: usize,
    step: usize,
    seed: u64,
) -> Result<Vec<(usize, Scalar)>> {
    if labels.len() != x.n {
        return Err(Error::LengthMismatch {
            left: x.n,
            right: labels.len(),
        });
    }
    if step == 0 {
        return Err(Error::param("step", "must be positive"));
    }
    if k_min > k_max {
        return Err(Error::param("k", format!("k_min {k_min} > k_max {k_max}")));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if k_min < classes.len() {
        return Err(Error::param(
            "k_min",
            format!("{k_min} is below the class count {}", classes.len()),
        ));
    }
    let mut out = Vec::new();
    for k in (k_min..=k_max).step_by(step) {
        let fit = kmeans::kmeans(x, k, seed)?;
        let assigned: Vec<i32> = fit.assignments.iter().map(|&a| a as i32).collect();
        out.push((k, metrics::mi(&assigned, labels)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(rows: Vec<Vec<f64>>) -> ReprSeq<f64> {
        let dim = rows[0].len();
        ReprSeq {
            len: rows.len(),
            dim,
            rows: rows.into_iter().flatten().collect(),
        }
    }

    #[test]
    fn extract_takes_the_final_timestep() {
        let seqs = vec![
            seq(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]]),
            seq(vec![vec![0.3, 0.4]]),
        ];
        let r = extract_instance_repr(&seqs).unwrap();
        assert_eq!(r.n, 2);
        assert_eq!(r.row(0), &[0.6, 0.8]);
        assert_eq!(r.row(1), &[0.3, 0.4], "length-1 region keeps its only vector");
    }

    #[test]
    fn extract_rejects_ragged_dims() {
        let seqs = vec![
            seq(vec![vec![1.0, 0.0]]),
            seq(vec![vec![1.0, 0.0, 0.0]]),
        ];
        assert!(extract_instance_repr(&seqs).is_err());
        assert!(extract_instance_repr::<f64>(&[]).is_err());
    }

    #[test]
    fn evaluate_scores_well_separated_classes() {
        // Two tight clusters at (0,0) and (5,5), both splits aligned.
        let mk = |offset: f64| -> (InstanceRepr<f64>, Vec<i32>) {
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for i in 0..8 {
                let jit = (i as f64 + offset) * 0.01;
                let (cx, cy, label) = if i % 2 == 0 { (0.0, 0.0, 0) } else { (5.0, 5.0, 1) };
                rows.push(cx + jit);
                rows.push(cy - jit);
                labels.push(label);
            }
            (InstanceRepr::new(8, 2, rows).unwrap(), labels)
        };
        let (train, train_labels) = mk(0.0);
        let (test, test_labels) = mk(0.3);
        let scores = evaluate(&train, &train_labels, &test, &test_labels, 1.0, None, 4).unwrap();
        assert_eq!(scores.acc, 1.0);
        assert_eq!(scores.nmi, 1.0);
        assert_eq!(scores.ari, 1.0);
    }

    #[test]
    fn sweep_walks_the_requested_grid() {
        let rows: Vec<f64> = (0..30)
            .flat_map(|i| vec![i as f64, (i as f64 * 0.7).sin()])
            .collect();
        let x = InstanceRepr::new(30, 2, rows).unwrap();
        let labels: Vec<i32> = (0..30).map(|i| i % 3).collect();
        let table = mi_sweep(&x, &labels, 3, 13, 5, 9).unwrap();
        let ks: Vec<usize> = table.iter().map(|&(k, _)| k).collect();
        assert_eq!(ks, vec![3, 8, 13]);
        // Single-cell sweep.
        assert_eq!(mi_sweep(&x, &labels, 4, 4, 5, 9).unwrap().len(), 1);
        // k_min below the class count is a contract violation.
        assert!(mi_sweep(&x, &labels, 2, 10, 5, 9).is_err());
    }
}
