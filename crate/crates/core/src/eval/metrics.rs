//! Label-agreement metrics from a contingency table.
//!
//! Mutual information uses natural logarithms over the joint counts:
//! `MI = Σ_{u,v} (n_uv / N) · ln(n_uv · N / (n_u · n_v))`. NMI divides by
//! the geometric mean of the marginal entropies, with two conventions for
//! degenerate inputs: both labelings constant → 1 (equal partitions), one
//! constant → 0 (no information). ARI is the standard pair-counting
//! adjusted form; when its denominator vanishes (both partitions trivial)
//! it is 1 by convention.
//!
//! All counts convert exactly to `f64` (they are far below 2⁵³), and
//! ratios are formed as one integer division each, so equal partitions
//! yield bitwise-equal MI and entropy — `nmi(a, a)` is exactly 1.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::Scalar;

/// Joint and marginal counts for two labelings.
#[derive(Debug, Clone)]
pub struct Contingency {
    pub counts: BTreeMap<(i32, i32), u64>,
    pub row_marginals: BTreeMap<i32, u64>,
    pub col_marginals: BTreeMap<i32, u64>,
    pub total: u64,
}

/// Tabulates two equal-length labelings.
pub fn contingency(a: &[i32], b: &[i32]) -> Result<Contingency> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::param("labels", "empty labelings have no metrics"));
    }
    let mut counts = BTreeMap::new();
    let mut row_marginals = BTreeMap::new();
    let mut col_marginals = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *counts.entry((x, y)).or_insert(0u64) += 1;
        *row_marginals.entry(x).or_insert(0u64) += 1;
        *col_marginals.entry(y).or_insert(0u64) += 1;
    }
    Ok(Contingency {
        counts,
        row_marginals,
        col_marginals,
        total: a.len() as u64,
    })
}

fn entropy(marginals: &BTreeMap<i32, u64>, total: u64) -> Scalar {
    let n = total as Scalar;
    marginals
        .values()
        .map(|&m| {
            let p = m as Scalar / n;
            p * (n / m as Scalar).ln()
        })
        .sum()
}

fn mi_of(table: &Contingency) -> Scalar {
    let n = table.total;
    table
        .counts
        .iter()
        .map(|(&(u, v), &c)| {
            let ru = table.row_marginals[&u];
            let cv = table.col_marginals[&v];
            let p = c as Scalar / n as Scalar;
            p * ((c * n) as Scalar / (ru * cv) as Scalar).ln()
        })
        .sum()
}

/// Mutual information in nats.
pub fn mi(a: &[i32], b: &[i32]) -> Result<Scalar> {
    Ok(mi_of(&contingency(a, b)?))
}

/// Normalized mutual information: `MI / √(H(a)·H(b))`.
pub fn nmi(a: &[i32], b: &[i32]) -> Result<Scalar> {
    let table = contingency(a, b)?;
    let ha = entropy(&table.row_marginals, table.total);
    let hb = entropy(&table.col_marginals, table.total);
    if ha == 0.0 && hb == 0.0 {
        // Two constant labelings are the same single-block partition.
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    Ok(mi_of(&table) / (ha * hb).sqrt())
}

fn comb2(x: u64) -> Scalar {
    (x * x.saturating_sub(1)) as Scalar / 2.0
}

/// Adjusted Rand index by pair counting.
pub fn ari(a: &[i32], b: &[i32]) -> Result<Scalar> {
    let table = contingency(a, b)?;
    let total2 = comb2(table.total);
    if total2 == 0.0 {
        // One point: every partition is the same partition.
        return Ok(1.0);
    }
    let sum_ij: Scalar = table.counts.values().map(|&c| comb2(c)).sum();
    let sum_a: Scalar = table.row_marginals.values().map(|&c| comb2(c)).sum();
    let sum_b: Scalar = table.col_marginals.values().map(|&c| comb2(c)).sum();
    let expected = sum_a * sum_b / total2;
    let denom = 0.5 * (sum_a + sum_b) - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((sum_ij - expected) / denom)
}
