//! Savitzky-Golay smoothing.
//!
//! Fitting a degree-`order` polynomial to a centered window by least
//! squares and reading off the fit value at the center is a linear
//! operation, so the interior of a series is smoothed by convolving with a
//! fixed weight vector. Near the ends, where a centered window does not
//! fit, a polynomial is fitted to the first (respectively last) full
//! window and evaluated at the boundary positions. That boundary rule
//! keeps polynomial inputs up to `order` exactly invariant over the whole
//! series — a mirror pad would bend them at the edges.

use crate::error::{Error, Result};
use crate::linalg;
use crate::num::Real;

/// Center-point smoothing weights for a `window`-wide degree-`order` fit.
///
/// `window` must be odd and larger than `order`. The weights sum to one
/// and reproduce the classic tabulated values, e.g. `[-3, 12, 17, 12, -3]/35`
/// for a five-point quadratic.
pub fn savgol_coefficients<T: Real>(window: usize, order: usize) -> Result<Vec<T>> {
    if window % 2 == 0 || window < 3 {
        return Err(Error::param("window", format!("must be odd and >= 3, got {window}")));
    }
    if order >= window {
        return Err(Error::param(
            "order",
            format!("polynomial order {order} needs more than {window} samples"),
        ));
    }
    let half = (window / 2) as i64;
    // Normal equations (AᵀA) g = e₀ over centered abscissas u ∈ {-h..h};
    // the weight on sample i is then the polynomial Σ_j g_j u_iʲ.
    let dim = order + 1;
    let mut ata = vec![vec![T::zero(); dim]; dim];
    for (r, row) in ata.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            let mut acc = T::zero();
            for u in -half..=half {
                acc = acc + T::from(u).unwrap().powi((r + c) as i32);
            }
            *v = acc;
        }
    }
    let mut e0 = vec![T::zero(); dim];
    e0[0] = T::one();
    let g = linalg::solve(ata, e0).ok_or_else(|| Error::param("window", "singular design matrix"))?;
    Ok((-half..=half)
        .map(|u| {
            let u = T::from(u).unwrap();
            g.iter()
                .enumerate()
                .fold(T::zero(), |acc, (j, gj)| acc + *gj * u.powi(j as i32))
        })
        .collect())
}

/// Least-squares polynomial fit of `ys` against abscissas `0..ys.len()`.
fn polyfit<T: Real>(ys: &[T], order: usize) -> Option<Vec<T>> {
    let dim = order + 1;
    let mut ata = vec![vec![T::zero(); dim]; dim];
    let mut aty = vec![T::zero(); dim];
    for (i, &y) in ys.iter().enumerate() {
        let u = T::from(i).unwrap();
        for r in 0..dim {
            let ur = u.powi(r as i32);
            aty[r] = aty[r] + ur * y;
            for (c, v) in ata[r].iter_mut().enumerate() {
                *v = *v + ur * u.powi(c as i32);
            }
        }
    }
    linalg::solve(ata, aty)
}

fn polyval<T: Real>(coeffs: &[T], u: T) -> T {
    coeffs
        .iter()
        .rev()
        .fold(T::zero(), |acc, &c| acc * u + c)
}

/// Smooths one series.
///
/// Series shorter than the window pass through unchanged (with a warning):
/// there is not enough support for the fit, and dropping the flight for
/// being short is the caller's decision, not the filter's.
pub fn savgol_smooth<T: Real>(xs: &[T], window: usize, order: usize) -> Result<Vec<T>> {
    let weights = savgol_coefficients::<T>(window, order)?;
    let n = xs.len();
    if n < window {
        log::warn!("series of length {n} shorter than window {window}: smoothing skipped");
        return Ok(xs.to_vec());
    }
    let half = window / 2;
    let mut out = vec![T::zero(); n];
    for i in half..(n - half) {
        let mut acc = T::zero();
        for (k, w) in weights.iter().enumerate() {
            acc = acc + *w * xs[i - half + k];
        }
        out[i] = acc;
    }
    // Boundary fits: one polynomial per end, evaluated at the positions the
    // centered window cannot reach.
    let head = polyfit(&xs[..window], order)
        .ok_or_else(|| Error::param("window", "singular boundary fit"))?;
    for i in 0..half {
        out[i] = polyval(&head, T::from(i).unwrap());
    }
    let tail = polyfit(&xs[n - window..], order)
        .ok_or_else(|| Error::param("window", "singular boundary fit"))?;
    for i in (n - half)..n {
        let u = T::from(i - (n - window)).unwrap();
        out[i] = polyval(&tail, u);
    }
    Ok(out)
}

/// Smooths each coordinate axis of a state sequence independently.
pub fn smooth_states<T: Real>(
    states: &[[T; 3]],
    window: usize,
    order: usize,
) -> Result<Vec<[T; 3]>> {
    let mut out = vec![[T::zero(); 3]; states.len()];
    for axis in 0..3 {
        let series: Vec<T> = states.iter().map(|s| s[axis]).collect();
        let smooth = savgol_smooth(&series, window, order)?;
        for (o, v) in out.iter_mut().zip(smooth) {
            o[axis] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_quadratic_weights_match_the_classic_table() {
        let w: Vec<f64> = savgol_coefficients(5, 2).unwrap();
        let expect = [-3.0, 12.0, 17.0, 12.0, -3.0].map(|v| v / 35.0);
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{w:?}");
        }
    }

    #[test]
    fn eleven_point_cubic_weights_match_the_classic_table() {
        let w: Vec<f64> = savgol_coefficients(11, 3).unwrap();
        let expect = [-36.0, 9.0, 44.0, 69.0, 84.0, 89.0, 84.0, 69.0, 44.0, 9.0, -36.0]
            .map(|v| v / 429.0);
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{w:?}");
        }
    }

    #[test]
    fn weights_sum_to_one() {
        for (w, o) in [(5, 2), (7, 3), (11, 3), (21, 4)] {
            let sum: f64 = savgol_coefficients(w, o).unwrap().iter().sum();
            assert!((sum - 1.0).abs() < 1e-10, "window {w} order {o}: {sum}");
        }
    }

    #[test]
    fn even_window_and_excessive_order_are_rejected() {
        assert!(savgol_coefficients::<f64>(10, 3).is_err());
        assert!(savgol_coefficients::<f64>(5, 5).is_err());
    }

    #[test]
    fn linear_ramp_is_unchanged_everywhere() {
        let xs: Vec<f64> = (0..40).map(|t| 0.5 * t as f64 - 3.0).collect();
        let out = savgol_smooth(&xs, 11, 3).unwrap();
        for (a, b) in out.iter().zip(&xs) {
            assert!((a - b).abs() < 1e-9, "ramp bent: {a} vs {b}");
        }
    }

    #[test]
    fn cubic_is_preserved_to_tight_tolerance() {
        let xs: Vec<f64> = (0..60).map(|t| {
            let t = t as f64;
            t * t * t - 2.0 * t * t
        }).collect();
        let out = savgol_smooth(&xs, 11, 3).unwrap();
        for (i, (a, b)) in out.iter().zip(&xs).enumerate() {
            // Values reach ~2e5, so compare to a relative-scaled bound.
            let tol = 1e-9 * b.abs().max(1.0);
            assert!((a - b).abs() < tol, "cubic bent at {i}: {a} vs {b}");
        }
    }

    #[test]
    fn short_series_passes_through() {
        let xs: Vec<f64> = (0..7).map(|t| (t as f64).sin()).collect();
        let out = savgol_smooth(&xs, 11, 3).unwrap();
        assert_eq!(out, xs);
    }

    #[test]
    fn noise_variance_is_reduced() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let clean: Vec<f64> = (0..400).map(|t| (t as f64 * 0.05).sin()).collect();
        let noisy: Vec<f64> = clean
            .iter()
            .map(|v| v + 0.1 * (rng.random::<f64>() - 0.5))
            .collect();
        let out = savgol_smooth(&noisy, 11, 3).unwrap();
        let mse = |a: &[f64]| -> f64 {
            a.iter()
                .zip(&clean)
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
                / a.len() as f64
        };
        assert!(mse(&out) < 0.5 * mse(&noisy), "no smoothing effect");
    }

    #[test]
    fn state_smoothing_applies_per_axis() {
        let states: Vec<[f64; 3]> = (0..30)
            .map(|t| {
                let t = t as f64;
                [2.0 * t, -t + 5.0, 0.25 * t * t * t]
            })
            .collect();
        let out = smooth_states(&states, 11, 3).unwrap();
        for (a, b) in out.iter().zip(&states) {
            for ax in 0..3 {
                let tol = 1e-9 * b[ax].abs().max(1.0);
                assert!((a[ax] - b[ax]).abs() < tol);
            }
        }
    }
}
