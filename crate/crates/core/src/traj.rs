//! Core trajectory and dataset types.
//!
//! A [`Trajectory`] is a variable-length sequence of `[x, y, z]` states in
//! the local tangent frame. A [`Dataset`] is a batch of trajectories padded
//! to a common length with NaN. Padding is strictly a storage detail:
//! every consumer derives validity from the recorded lengths and never by
//! scanning for NaN, so padded slots never participate in arithmetic.

use crate::error::{Error, Result};
use crate::Scalar;

/// Padding sentinel used beyond each instance's valid length.
pub const PAD: Scalar = Scalar::NAN;

/// One raw surveillance record as ingested from CSV.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RawRecord {
    pub flight_id: String,
    pub timestamp_s: f64,
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub baro_alt_m: f64,
}

/// A single flight in the local tangent frame.
///
/// After preprocessing the coordinates are scaled by the bounding radius,
/// so `|x|, |y| ≤ 1`; intermediate pipeline stages hold meters in the same
/// shape and validate only once scaling has run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: String,
    /// One `[x, y, z]` state per timestep, 1 Hz (or a fixed stride of it).
    pub states: Vec<[Scalar; 3]>,
    /// Class label when known.
    pub label: Option<i32>,
}

impl Trajectory {
    pub fn new(id: impl Into<String>, states: Vec<[Scalar; 3]>) -> Self {
        Trajectory {
            id: id.into(),
            states,
            label: None,
        }
    }

    pub fn with_label(mut self, label: i32) -> Self {
        self.label = Some(label);
        self
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Checks every [`Trajectory`] invariant and reports the violated ones.
///
/// Returns an empty list exactly when the trajectory is valid: at least two
/// states, every coordinate finite, and planar coordinates inside the
/// scaled range `[-1, 1]` (with a small tolerance for smoothing overshoot
/// at the boundary).
pub fn validate_trajectory(traj: &Trajectory) -> Vec<String> {
    let mut violations = Vec::new();
    if traj.states.len() < 2 {
        violations.push(format!(
            "fewer than 2 states (got {})",
            traj.states.len()
        ));
    }
    const SLACK: Scalar = 1e-6;
    for (t, s) in traj.states.iter().enumerate() {
        if s.iter().any(|v| !v.is_finite()) {
            violations.push(format!("non-finite coordinate at state {t}"));
        } else if s[0].abs() > 1.0 + SLACK || s[1].abs() > 1.0 + SLACK {
            violations.push(format!("planar coordinate outside scaled range at state {t}"));
        }
    }
    violations
}

/// A batch of trajectories padded to a common length.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub labels: Vec<Option<i32>>,
    /// Valid length of each instance; everything at `t >= lengths[i]` is padding.
    pub lengths: Vec<usize>,
    /// Per-instance row-major `[t_max * cols]` buffers, NaN beyond the valid length.
    pub rows: Vec<Vec<Scalar>>,
    /// Common padded length, the maximum of `lengths`.
    pub t_max: usize,
    /// Columns per timestep (3 for raw positions).
    pub cols: usize,
    /// Per-instance per-step segment ids, once segmentation has run.
    /// Aligned with `lengths` (no padding entries).
    pub segment_ids: Option<Vec<Vec<u32>>>,
    /// Provenance carried into the container header (stage list, parameters).
    pub meta: Vec<(String, String)>,
}

impl Dataset {
    /// Number of instances.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Borrow instance `i` as `[t_max][cols]` rows (padding included).
    pub fn instance(&self, i: usize) -> &[Scalar] {
        &self.rows[i]
    }

    /// Valid (non-padding) rows of instance `i`.
    pub fn valid_rows(&self, i: usize) -> &[Scalar] {
        &self.rows[i][..self.lengths[i] * self.cols]
    }

    /// State `t` of instance `i`; `t` must be within the valid length.
    pub fn state(&self, i: usize, t: usize) -> [Scalar; 3] {
        debug_assert!(self.cols >= 3 && t < self.lengths[i]);
        let o = t * self.cols;
        [self.rows[i][o], self.rows[i][o + 1], self.rows[i][o + 2]]
    }

    /// Labels as plain `i32` with `-1` standing for "unlabeled".
    pub fn labels_i32(&self) -> Vec<i32> {
        self.labels.iter().map(|l| l.unwrap_or(-1)).collect()
    }

    /// Append a provenance line.
    pub fn push_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.meta.push((key.into(), value.into()));
    }
}

/// Pads a set of trajectories to the longest length with NaN.
///
/// Every input must already be valid (see [`validate_trajectory`]); the
/// common padded length is the maximum length in this batch.
pub fn pad_dataset(trajs: Vec<Trajectory>) -> Result<Dataset> {
    if trajs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for t in &trajs {
        let v = validate_trajectory(t);
        if !v.is_empty() {
            return Err(Error::InvalidTrajectory {
                id: t.id.clone(),
                reason: v.join("; "),
            });
        }
    }
    let t_max = trajs.iter().map(|t| t.len()).max().unwrap();
    let cols = 3;
    let mut ids = Vec::with_capacity(trajs.len());
    let mut labels = Vec::with_capacity(trajs.len());
    let mut lengths = Vec::with_capacity(trajs.len());
    let mut rows = Vec::with_capacity(trajs.len());
    for t in trajs {
        let mut buf = vec![PAD; t_max * cols];
        for (i, s) in t.states.iter().enumerate() {
            buf[i * cols..(i + 1) * cols].copy_from_slice(s);
        }
        ids.push(t.id);
        labels.push(t.label);
        lengths.push(t.states.len());
        rows.push(buf);
    }
    Ok(Dataset {
        ids,
        labels,
        lengths,
        rows,
        t_max,
        cols,
        segment_ids: None,
        meta: Vec::new(),
    })
}

/// Inverse of [`pad_dataset`]: drops padding and returns the original
/// trajectories, coordinate values bit-preserved.
pub fn strip_padding(ds: &Dataset) -> Vec<Trajectory> {
    (0..ds.len())
        .map(|i| {
            let states = (0..ds.lengths[i]).map(|t| ds.state(i, t)).collect();
            Trajectory {
                id: ds.ids[i].clone(),
                states,
                label: ds.labels[i],
            }
        })
        .collect()
}

/// Stable 64-bit FNV-1a hash of a flight id.
///
/// Used for deterministic train/validation splits; intentionally
/// hand-rolled so the split never depends on the standard library's
/// unspecified hasher.
pub fn id_hash(id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministically routes an id to the held-out side with probability
/// close to `fraction`, independent of insertion order and process.
pub fn in_holdout(id: &str, fraction: f64) -> bool {
    (id_hash(id) % 10_000) < (fraction * 10_000.0).round() as u64
}

/// Splits trajectories into (retained, held-out) by id hash.
pub fn split_by_hash(trajs: Vec<Trajectory>, holdout_fraction: f64) -> (Vec<Trajectory>, Vec<Trajectory>) {
    let mut keep = Vec::new();
    let mut hold = Vec::new();
    for t in trajs {
        if in_holdout(&t.id, holdout_fraction) {
            hold.push(t);
        } else {
            keep.push(t);
        }
    }
    (keep, hold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(id: &str, pts: &[[Scalar; 3]]) -> Trajectory {
        Trajectory::new(id, pts.to_vec())
    }

    #[test]
    fn valid_two_state_trajectory_has_no_violations() {
        let t = short("a", &[[0.0, 0.0, 0.0], [0.1, 0.2, 100.0]]);
        assert!(validate_trajectory(&t).is_empty());
    }

    #[test]
    fn nan_coordinate_is_reported_with_its_index() {
        let t = short("a", &[[0.0, 0.0, 0.0], [0.1, Scalar::NAN, 0.0], [0.2, 0.2, 0.0]]);
        let v = validate_trajectory(&t);
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("state 1"), "{v:?}");
    }

    #[test]
    fn single_state_trajectory_violates_length() {
        let t = short("a", &[[0.0, 0.0, 0.0]]);
        let v = validate_trajectory(&t);
        assert!(v.iter().any(|s| s.contains("fewer than 2")), "{v:?}");
    }

    #[test]
    fn planar_overflow_is_reported() {
        let t = short("a", &[[0.0, 0.0, 0.0], [1.5, 0.0, 0.0]]);
        let v = validate_trajectory(&t);
        assert!(v.iter().any(|s| s.contains("scaled range")), "{v:?}");
    }

    #[test]
    fn padding_fills_shorter_instances_with_nan() {
        let a = short("a", &[[0.0; 3], [0.1, 0.1, 0.1], [0.2, 0.2, 0.2]]);
        let b = short("b", &[[0.5, 0.5, 0.5], [0.6, 0.6, 0.6]]);
        let ds = pad_dataset(vec![a, b]).unwrap();
        assert_eq!(ds.t_max, 3);
        assert_eq!(ds.lengths, vec![3, 2]);
        // Valid slots hold data, padded slots hold NaN.
        assert_eq!(ds.state(1, 1), [0.6, 0.6, 0.6]);
        assert!(ds.rows[1][2 * 3..3 * 3].iter().all(|v| v.is_nan()));
    }

    #[test]
    fn equal_lengths_mean_no_padding() {
        let a = short("a", &[[0.0; 3], [0.1; 3]]);
        let b = short("b", &[[0.2; 3], [0.3; 3]]);
        let ds = pad_dataset(vec![a, b]).unwrap();
        assert!(ds.rows.iter().flatten().all(|v| v.is_finite()));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(pad_dataset(vec![]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn invalid_trajectory_is_rejected_with_id() {
        let bad = short("broken", &[[0.0; 3]]);
        match pad_dataset(vec![bad]) {
            Err(Error::InvalidTrajectory { id, .. }) => assert_eq!(id, "broken"),
            other => panic!("expected InvalidTrajectory, got {other:?}"),
        }
    }

    #[test]
    fn strip_padding_roundtrips_bit_exactly() {
        let a = short("a", &[[0.125, -0.25, 1e-300], [0.1, 0.2, 0.3], [-1.0, 1.0, 0.0]]);
        let b = short("b", &[[0.5, 0.5, 0.5], [0.625, 0.625, 0.625]]).with_label(7);
        let orig = vec![a, b];
        let ds = pad_dataset(orig.clone()).unwrap();
        let back = strip_padding(&ds);
        assert_eq!(back, orig);
    }

    #[test]
    fn hash_split_is_deterministic_and_disjoint() {
        let trajs: Vec<Trajectory> = (0..200)
            .map(|i| short(&format!("f{i}"), &[[0.0; 3], [0.1; 3]]))
            .collect();
        let (a1, b1) = split_by_hash(trajs.clone(), 0.3);
        let (a2, b2) = split_by_hash(trajs, 0.3);
        let ids = |v: &[Trajectory]| v.iter().map(|t| t.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&a1), ids(&a2));
        assert_eq!(ids(&b1), ids(&b2));
        // Roughly the requested fraction lands in the holdout.
        let frac = b1.len() as f64 / 200.0;
        assert!(frac > 0.15 && frac < 0.45, "holdout fraction {frac}");
        assert_eq!(a1.len() + b1.len(), 200);
    }
}
