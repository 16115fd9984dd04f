//! Geometric feature expansion.
//!
//! Each timestep's raw `[x, y, z]` position can be augmented with two
//! derived groups:
//!
//! * **path vectors** — the unit direction of the displacement to the next
//!   state. The last step has no successor and copies its predecessor;
//!   zero displacements carry the previous direction forward (a hovering
//!   aircraft keeps its heading), and a zero displacement at the very
//!   first step takes the direction of the first nonzero displacement.
//! * **polar components** — planar radius and the sine/cosine of the
//!   planar bearing, with the origin convention `(r, sin, cos) = (0, 0, 1)`.
//!
//! Groups always appear in the fixed order (position, path, polar), so the
//! feature width is 3, 6 or 9 columns.

use crate::error::{Error, Result};
use crate::num::Real;

/// Which feature groups to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSelector {
    pub path: bool,
    pub polar: bool,
}

impl FeatureSelector {
    pub const POSITION_ONLY: FeatureSelector = FeatureSelector { path: false, polar: false };
    pub const ALL: FeatureSelector = FeatureSelector { path: true, polar: true };

    /// Feature columns per timestep.
    pub fn cols(&self) -> usize {
        3 + 3 * usize::from(self.path) + 3 * usize::from(self.polar)
    }
}

impl std::str::FromStr for FeatureSelector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pos" => Ok(FeatureSelector { path: false, polar: false }),
            "pos+path" => Ok(FeatureSelector { path: true, polar: false }),
            "pos+polar" => Ok(FeatureSelector { path: false, polar: true }),
            "all" => Ok(FeatureSelector::ALL),
            other => Err(Error::param(
                "features",
                format!("expected pos|pos+path|pos+polar|all, got `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for FeatureSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match (self.path, self.polar) {
            (false, false) => "pos",
            (true, false) => "pos+path",
            (false, true) => "pos+polar",
            (true, true) => "all",
        })
    }
}

/// Unit direction of each step's displacement.
pub fn path_vectors<T: Real>(states: &[[T; 3]]) -> Result<Vec<[T; 3]>> {
    let n = states.len();
    if n < 2 {
        return Err(Error::TooShort { len: n });
    }
    let mut out: Vec<[T; 3]> = Vec::with_capacity(n);
    let mut prev: Option<[T; 3]> = None;
    for t in 0..n - 1 {
        let dir = step_direction(&states[t], &states[t + 1]);
        let v = match (dir, prev) {
            (Some(v), _) => v,
            (None, Some(p)) => p,
            // Zero displacement with no history: look ahead for the first
            // step that actually moves.
            (None, None) => {
                let ahead = (t + 1..n - 1)
                    .find_map(|k| step_direction(&states[k], &states[k + 1]));
                ahead.ok_or(Error::Stationary)?
            }
        };
        out.push(v);
        prev = Some(v);
    }
    // The final timestep has no successor; it repeats its predecessor.
    out.push(*out.last().unwrap());
    Ok(out)
}

fn step_direction<T: Real>(a: &[T; 3], b: &[T; 3]) -> Option<[T; 3]> {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if norm == T::zero() {
        None
    } else {
        Some([d[0] / norm, d[1] / norm, d[2] / norm])
    }
}

/// Planar radius and bearing sine/cosine per state.
///
/// At the origin the bearing is taken as zero, giving `(0, 0, 1)`.
pub fn polar_components<T: Real>(states: &[[T; 3]]) -> Vec<[T; 3]> {
    states
        .iter()
        .map(|s| {
            let r = (s[0] * s[0] + s[1] * s[1]).sqrt();
            if r == T::zero() {
                [T::zero(), T::zero(), T::one()]
            } else {
                [r, s[1] / r, s[0] / r]
            }
        })
        .collect()
}

/// Per-instance feature matrix, row-major `[len × cols]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSeq<T> {
    pub len: usize,
    pub cols: usize,
    pub rows: Vec<T>,
}

/// Expands a state sequence into the selected feature groups.
pub fn assemble_features<T: Real>(
    states: &[[T; 3]],
    selector: FeatureSelector,
) -> Result<FeatureSeq<T>> {
    let n = states.len();
    if n < 2 {
        return Err(Error::TooShort { len: n });
    }
    let path = if selector.path {
        Some(path_vectors(states)?)
    } else {
        None
    };
    let polar = if selector.polar {
        Some(polar_components(states))
    } else {
        None
    };
    let cols = selector.cols();
    let mut rows = Vec::with_capacity(n * cols);
    for t in 0..n {
        rows.extend_from_slice(&states[t]);
        if let Some(p) = &path {
            rows.extend_from_slice(&p[t]);
        }
        if let Some(p) = &polar {
            rows.extend_from_slice(&p[t]);
        }
    }
    Ok(FeatureSeq { len: n, cols, rows })
}
