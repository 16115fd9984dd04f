//! Soft-nearest-neighbor contrastive loss over segment identities.
//!
//! A training batch of per-instance representation sequences is flattened
//! into one matrix `Z_f` (`n × K`, valid timesteps only) with a parallel
//! vector of *global* segment ids: each instance's local ids are remapped
//! to fresh consecutive values so ids never collide across instances.
//!
//! For anchor `i`, every other position is scored by `s_ij = zᵢᵀz_j / τ`.
//! Positions sharing the anchor's id are its positives `P(i)`; the
//! negative set depends on the variant — `Modified` contrasts against
//! positions with a *different* id, `Rearranged` against all `k ≠ i`.
//! The per-anchor term is
//!
//! ```text
//! ℓ_i = log Σ_{j ∈ P(i)} exp(s_ij) − log Σ_{k ∈ N(i)} exp(s_ik)
//! ```
//!
//! and the loss is `−mean(ℓ_i)` over valid anchors (those with at least
//! one positive). Both log-sums run through max-shifted log-sum-exp;
//! excluded positions carry an additive `−1e9` and underflow to exact
//! zeros, so masking costs no precision.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::tensor::{
    add, concat, dropout_mask_apply, log_sum_exp, matmul, scale, sub, sum_all, transpose, Tensor,
};

/// Which positions count as negatives for an anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossVariant {
    /// Negatives are positions with a different segment id (default).
    Modified,
    /// Negatives are all other positions, positives included.
    Rearranged,
}

impl FromStr for LossVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modified" => Ok(LossVariant::Modified),
            "rearranged" => Ok(LossVariant::Rearranged),
            other => Err(Error::param(
                "loss-variant",
                format!("unknown variant `{other}` (expected modified|rearranged)"),
            )),
        }
    }
}

impl fmt::Display for LossVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossVariant::Modified => "modified",
            LossVariant::Rearranged => "rearranged",
        })
    }
}

/// Flattened batch: representation rows and their global segment ids.
#[derive(Debug, Clone)]
pub struct FlatBatch<T: Real> {
    /// `[n, K]` stacked valid timesteps, instance order preserved.
    pub z: Tensor<T>,
    /// Global ids, one per row, positive and consecutive from 1.
    pub ids: Vec<u32>,
}

/// Remaps per-instance segment ids to fresh consecutive globals.
///
/// Instances are scanned in order; within one instance each distinct local
/// id maps, at first occurrence, to the next unused global. Distinct
/// instances therefore never share an id even when their local ids match.
pub fn remap_ids(per_instance: &[&[u32]]) -> Vec<u32> {
    let mut out = Vec::with_capacity(per_instance.iter().map(|s| s.len()).sum());
    let mut next: u32 = 1;
    for ids in per_instance {
        let mut seen: Vec<(u32, u32)> = Vec::new();
        for &local in *ids {
            let global = match seen.iter().find(|(l, _)| *l == local) {
                Some(&(_, g)) => g,
                None => {
                    let g = next;
                    next += 1;
                    seen.push((local, g));
                    g
                }
            };
            out.push(global);
        }
    }
    out
}

/// Stacks per-instance representation sequences and remaps their ids.
///
/// Each part pairs a `[T_i, K]` tensor (valid rows only) with its `T_i`
/// local segment ids. The stacked tensor stays on the parts' tape, so the
/// loss backpropagates into every instance.
pub fn flatten_batch<T: Real>(parts: &[(&Tensor<T>, &[u32])]) -> Result<FlatBatch<T>> {
    if parts.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for (z, ids) in parts {
        if z.rows() != ids.len() {
            return Err(Error::LengthMismatch {
                left: z.rows(),
                right: ids.len(),
            });
        }
    }
    let tensors: Vec<&Tensor<T>> = parts.iter().map(|(z, _)| *z).collect();
    let id_slices: Vec<&[u32]> = parts.iter().map(|(_, ids)| *ids).collect();
    Ok(FlatBatch {
        z: concat(0, &tensors)?,
        ids: remap_ids(&id_slices),
    })
}

/// Soft-nearest-neighbor loss over a flattened batch.
///
/// Returns a scalar tensor (tracked whenever `z` is tracked). Anchors
/// without a positive are excluded from the mean. Errors: `τ ≤ 0`; a batch
/// where no anchor has a positive, or (`Modified` only) where every row
/// shares one id so the negative set is empty.
pub fn snn_loss<T: Real>(
    z: &Tensor<T>,
    ids: &[u32],
    tau: T,
    variant: LossVariant,
) -> Result<Tensor<T>> {
    let n = z.rows();
    if ids.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: ids.len(),
        });
    }
    if tau <= T::zero() {
        return Err(Error::param("tau", "temperature must be positive"));
    }
    if n < 2 {
        return Err(Error::DegenerateBatch);
    }

    let neg_inf = T::from(crate::encoder::MASK_NEG).unwrap();
    let mut pos_mask = vec![T::zero(); n * n];
    let mut neg_mask = vec![T::zero(); n * n];
    let mut valid = vec![false; n];
    for i in 0..n {
        let mut has_pos = false;
        let mut has_neg = false;
        for j in 0..n {
            let positive = i != j && ids[i] == ids[j];
            let negative = match variant {
                LossVariant::Modified => ids[i] != ids[j],
                LossVariant::Rearranged => i != j,
            };
            if !positive {
                pos_mask[i * n + j] = neg_inf;
            } else {
                has_pos = true;
            }
            if !negative {
                neg_mask[i * n + j] = neg_inf;
            } else {
                has_neg = true;
            }
        }
        valid[i] = has_pos && has_neg;
    }
    let count = valid.iter().filter(|&&v| v).count();
    if count == 0 {
        return Err(Error::DegenerateBatch);
    }

    let inv_count = T::one() / T::from(count).unwrap();
    let weights = Tensor::col(
        valid
            .iter()
            .map(|&v| if v { inv_count } else { T::zero() })
            .collect(),
    );
    let scores = scale(&matmul(z, &transpose(z))?, T::one() / tau);
    let lse_pos = log_sum_exp(&add(&scores, &Tensor::new([n, n], pos_mask))?);
    let lse_neg = log_sum_exp(&add(&scores, &Tensor::new([n, n], neg_mask))?);
    let per_anchor = sub(&lse_pos, &lse_neg)?;
    let weighted = dropout_mask_apply(&per_anchor, &weights)?;
    Ok(scale(&sum_all(&weighted), -T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{grad_check, Tape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_rows(n: usize, k: usize, seed: u64) -> Tensor<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(n * k);
        for _ in 0..n {
            let row: Vec<f64> = (0..k).map(|_| rng.random::<f64>() - 0.5).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            data.extend(row.iter().map(|v| v / norm));
        }
        Tensor::new([n, k], data)
    }

    /// Straightforward double-loop evaluation of the same definition.
    fn naive_loss(z: &Tensor<f64>, ids: &[u32], tau: f64, variant: LossVariant) -> Option<f64> {
        let n = z.rows();
        let k = z.cols();
        let sim = |i: usize, j: usize| {
            (0..k).map(|c| z.at(i, c) * z.at(j, c)).sum::<f64>() / tau
        };
        let mut total = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            let mut pos = 0.0;
            let mut neg = 0.0;
            let mut has_pos = false;
            let mut has_neg = false;
            for j in 0..n {
                if i != j && ids[i] == ids[j] {
                    pos += sim(i, j).exp();
                    has_pos = true;
                }
                let is_neg = match variant {
                    LossVariant::Modified => ids[i] != ids[j],
                    LossVariant::Rearranged => i != j,
                };
                if is_neg {
                    neg += sim(i, j).exp();
                    has_neg = true;
                }
            }
            if has_pos && has_neg {
                total += pos.ln() - neg.ln();
                count += 1;
            }
        }
        (count > 0).then(|| -total / count as f64)
    }

    #[test]
    fn remap_assigns_fresh_globals_per_instance() {
        assert_eq!(
            remap_ids(&[&[1, 1, 2], &[1, 2, 2]]),
            vec![1, 1, 2, 3, 4, 4]
        );
        // Single instance: identity up to renumbering.
        assert_eq!(remap_ids(&[&[3, 3, 7, 9]]), vec![1, 1, 2, 3]);
        // Arbitrary local ids renumber in first-occurrence order.
        assert_eq!(remap_ids(&[&[7, 7, 3]]), vec![1, 1, 2]);
        assert_eq!(remap_ids(&[]), Vec::<u32>::new());
    }

    #[test]
    fn flatten_stacks_rows_and_ids() {
        let a = Tensor::new([2, 2], vec![1.0f64, 0.0, 0.0, 1.0]);
        let b = Tensor::new([1, 2], vec![0.5f64, 0.5]);
        let fb = flatten_batch(&[(&a, &[1, 1][..]), (&b, &[1][..])]).unwrap();
        assert_eq!(fb.z.shape(), [3, 2]);
        assert_eq!(fb.ids, vec![1, 1, 2]);
        assert_eq!(fb.z.at(2, 0), 0.5);
        let err = flatten_batch(&[(&a, &[1][..])]);
        assert!(err.is_err(), "row/id count mismatch must fail");
    }

    #[test]
    fn hand_value_on_basis_vectors() {
        // Rows e1, e1, e2 with ids (1,1,2) at τ=1: anchors 1 and 2 each
        // contribute log e¹ − log e⁰ = 1; anchor 3 has no positive.
        let z = Tensor::new([3, 2], vec![1.0f64, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let loss = snn_loss(&z, &[1, 1, 2], 1.0, LossVariant::Modified).unwrap();
        assert!((loss.item().unwrap() - (-1.0)).abs() < 1e-12);
        // Rearranged: denominator gains the positive term e¹.
        let loss = snn_loss(&z, &[1, 1, 2], 1.0, LossVariant::Rearranged).unwrap();
        let expected = -(1.0 - (1.0f64.exp() + 1.0).ln());
        assert!((loss.item().unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn matches_naive_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..20 {
            let n = rng.random_range(4..40);
            let z = unit_rows(n, 8, 100 + trial);
            let ids: Vec<u32> = (0..n).map(|_| rng.random_range(1..5)).collect();
            for variant in [LossVariant::Modified, LossVariant::Rearranged] {
                for tau in [0.05, 0.5, 1.0] {
                    let ours = snn_loss(&z, &ids, tau, variant);
                    match naive_loss(&z, &ids, tau, variant) {
                        Some(want) => {
                            let got = ours.unwrap().item().unwrap();
                            let rel = (got - want).abs() / want.abs().max(1e-12);
                            assert!(rel < 1e-12, "trial {trial} {variant} τ={tau}: {got} vs {want}");
                        }
                        None => assert!(ours.is_err()),
                    }
                }
            }
        }
    }

    #[test]
    fn joint_row_permutation_leaves_loss_unchanged() {
        let z = unit_rows(9, 5, 3);
        let ids = [1u32, 1, 2, 2, 2, 3, 3, 1, 3];
        let base = snn_loss(&z, &ids, 0.3, LossVariant::Modified)
            .unwrap()
            .item()
            .unwrap();
        let perm = [4usize, 0, 8, 2, 6, 1, 3, 7, 5];
        let mut pdata = Vec::new();
        let pids: Vec<u32> = perm.iter().map(|&i| ids[i]).collect();
        for &i in &perm {
            pdata.extend((0..5).map(|c| z.at(i, c)));
        }
        let pz = Tensor::new([9, 5], pdata);
        let permuted = snn_loss(&pz, &pids, 0.3, LossVariant::Modified)
            .unwrap()
            .item()
            .unwrap();
        assert!((base - permuted).abs() < 1e-12);
    }

    #[test]
    fn degenerate_batches_are_rejected() {
        let z = unit_rows(4, 3, 4);
        // All rows share one id: no negatives in the modified variant.
        assert!(matches!(
            snn_loss(&z, &[1, 1, 1, 1], 1.0, LossVariant::Modified),
            Err(Error::DegenerateBatch)
        ));
        // All ids distinct: no anchor has a positive under either variant.
        assert!(matches!(
            snn_loss(&z, &[1, 2, 3, 4], 1.0, LossVariant::Rearranged),
            Err(Error::DegenerateBatch)
        ));
        // τ must be positive.
        assert!(snn_loss(&z, &[1, 1, 2, 2], 0.0, LossVariant::Modified).is_err());
        assert!(snn_loss(&z, &[1, 1, 2, 2], -1.0, LossVariant::Modified).is_err());
        // Single-id batches are fine in the rearranged variant: the
        // denominator is every other row.
        assert!(snn_loss(&z, &[1, 1, 1, 1], 1.0, LossVariant::Rearranged).is_ok());
    }

    #[test]
    fn anchors_without_positives_are_skipped() {
        // Third row's segment is a singleton; only the first two anchors count.
        let z = Tensor::new([3, 2], vec![1.0f64, 0.0, 0.0, 1.0, -1.0, 0.0]);
        let ids = [5u32, 5, 9];
        let loss = snn_loss(&z, &ids, 1.0, LossVariant::Modified)
            .unwrap()
            .item()
            .unwrap();
        // Anchor 1: pos = e^{z1·z2} = e^0; neg = e^{z1·z3} = e^{-1}.
        // Anchor 2: pos = e^0; neg = e^{z2·z3} = e^0.
        let expected = -((0.0 - (-1.0)) + (0.0 - 0.0)) / 2.0;
        assert!((loss - expected).abs() < 1e-12, "{loss} vs {expected}");
    }

    #[test]
    fn high_temperature_approaches_count_ratio() {
        // As τ → ∞ every exponential tends to 1, so the per-anchor term
        // tends to log |P(i)| − log |N(i)|.
        let z = unit_rows(8, 4, 5);
        let ids = [1u32, 1, 1, 2, 2, 3, 3, 3];
        let loss = snn_loss(&z, &ids, 1e6, LossVariant::Modified)
            .unwrap()
            .item()
            .unwrap();
        let mut expected = 0.0;
        for i in 0..8 {
            let p = (0..8).filter(|&j| j != i && ids[j] == ids[i]).count() as f64;
            let q = (0..8).filter(|&j| ids[j] != ids[i]).count() as f64;
            expected -= p.ln() - q.ln();
        }
        expected /= 8.0;
        assert!((loss - expected).abs() < 1e-3, "{loss} vs {expected}");
    }

    #[test]
    fn loss_gradient_passes_numeric_check() {
        let z = unit_rows(6, 4, 6);
        let ids = vec![1u32, 1, 2, 2, 3, 3];
        for variant in [LossVariant::Modified, LossVariant::Rearranged] {
            let report = grad_check(
                |x| snn_loss(x, &ids, 0.5, variant),
                &z,
                1e-3,
                1e-4,
            )
            .unwrap();
            assert!(
                report.pass,
                "{variant}: max rel err {}",
                report.max_rel_err
            );
        }
    }

    #[test]
    fn loss_backpropagates_through_flatten() {
        let tape = Tape::new();
        let a = tape.watch(&unit_rows(3, 4, 7));
        let b = tape.watch(&unit_rows(2, 4, 8));
        let fb = flatten_batch(&[(&a, &[1, 1, 2][..]), (&b, &[1, 1][..])]).unwrap();
        assert_eq!(fb.ids, vec![1, 1, 2, 3, 3]);
        let loss = snn_loss(&fb.z, &fb.ids, 0.7, LossVariant::Modified).unwrap();
        let grads = crate::tensor::backward(&loss).unwrap();
        let ga = grads.wrt(&a).expect("gradient for first instance");
        let gb = grads.wrt(&b).expect("gradient for second instance");
        assert!(ga.iter().any(|&v| v != 0.0));
        assert!(gb.iter().any(|&v| v != 0.0));
    }
}
