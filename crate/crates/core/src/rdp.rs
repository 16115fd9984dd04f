//! Corner detection and per-step segment ids.
//!
//! A trajectory is simplified by the classic chord test: the interior
//! point farthest from the segment between the endpoints either exceeds
//! the tolerance — then it is a corner and both halves are examined — or
//! the whole span is geometrically straight. The implementation runs on an
//! explicit LIFO stack rather than recursion, so arbitrarily long flights
//! cannot overflow the call stack; the marked set is identical either way.
//!
//! Corner marks then become per-step segment ids by cumulative sum, with
//! the final step folded into the segment of its predecessor (the last
//! mark closes the trajectory rather than opening a one-state segment).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::traj::Dataset;
use crate::Scalar;

/// Distance from `p` to the segment through `s` and `e`.
///
/// For a degenerate segment (`s == e`) this is the distance to `s`;
/// otherwise the perpendicular distance to the infinite line, computed
/// from the cross-product area.
pub fn perpendicular_distance<T: Real>(p: &[T; 3], s: &[T; 3], e: &[T; 3]) -> T {
    let d = [e[0] - s[0], e[1] - s[1], e[2] - s[2]];
    let chord = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if chord == T::zero() {
        let v = [p[0] - s[0], p[1] - s[1], p[2] - s[2]];
        return (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    }
    let w = [s[0] - p[0], s[1] - p[1], s[2] - p[2]];
    let c = [
        d[1] * w[2] - d[2] * w[1],
        d[2] * w[0] - d[0] * w[2],
        d[0] * w[1] - d[1] * w[0],
    ];
    (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt() / chord
}

/// Marks corner points with tolerance `eps`.
///
/// Both endpoints are always marked. Within an interval the farthest
/// interior point wins, ties broken towards the lowest index, and splits
/// require strictly exceeding `eps`.
pub fn rdp_mask<T: Real>(points: &[[T; 3]], eps: T) -> Result<Vec<bool>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooShort { len: n });
    }
    let mut mask = vec![false; n];
    mask[0] = true;
    mask[n - 1] = true;
    let mut stack = vec![(0usize, n - 1usize)];
    while let Some((s, e)) = stack.pop() {
        if e <= s + 1 {
            continue;
        }
        let mut best_k = s + 1;
        let mut best_d = T::neg_infinity();
        for k in (s + 1)..e {
            let d = perpendicular_distance(&points[k], &points[s], &points[e]);
            if d > best_d {
                best_d = d;
                best_k = k;
            }
        }
        if best_d > eps {
            mask[best_k] = true;
            stack.push((s, best_k));
            stack.push((best_k, e));
        }
    }
    Ok(mask)
}

/// Turns a corner mask into per-step segment ids.
///
/// Ids are the cumulative sum of the mask, except that the final step
/// inherits the id of its predecessor: the trailing mark closes the last
/// segment instead of opening an empty one. Ids therefore start at 1,
/// never decrease, and step by at most one.
pub fn assign_segment_ids(mask: &[bool]) -> Vec<u32> {
    debug_assert!(mask.len() >= 2);
    let mut ids = Vec::with_capacity(mask.len());
    let mut acc = 0u32;
    for &m in mask {
        acc += u32::from(m);
        ids.push(acc);
    }
    let n = ids.len();
    ids[n - 1] = ids[n - 2];
    ids
}

/// Runs corner detection over every instance of a dataset and attaches the
/// resulting segment ids.
///
/// `eps` applies to the stored (scaled) coordinates. Returns the number of
/// segments per instance.
pub fn segment_dataset(ds: &mut Dataset, eps: Scalar) -> Result<Vec<u32>> {
    if ds.cols < 3 {
        return Err(Error::format(format!(
            "segmentation needs 3 coordinate columns, dataset has {}",
            ds.cols
        )));
    }
    let per_instance: Vec<Result<Vec<u32>>> = (0..ds.len())
        .into_par_iter()
        .map(|i| {
            let states: Vec<[Scalar; 3]> = (0..ds.lengths[i]).map(|t| ds.state(i, t)).collect();
            let mask = rdp_mask(&states, eps)?;
            Ok(assign_segment_ids(&mask))
        })
        .collect();
    let mut all_ids = Vec::with_capacity(ds.len());
    for (i, r) in per_instance.into_iter().enumerate() {
        match r {
            Ok(ids) => all_ids.push(ids),
            Err(e) => {
                return Err(Error::InvalidTrajectory {
                    id: ds.ids[i].clone(),
                    reason: e.to_string(),
                })
            }
        }
    }
    let counts: Vec<u32> = all_ids.iter().map(|ids| *ids.last().unwrap()).collect();
    ds.segment_ids = Some(all_ids);
    ds.push_meta("segment.epsilon", format!("{eps}"));
    Ok(counts)
}
