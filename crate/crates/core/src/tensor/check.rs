//! Finite-difference gradient checking.
//!
//! The check runs a function once on a tracked copy of the input to get
//! analytic gradients, then probes every coordinate with a central
//! difference on untracked copies. It is the referee between the hand
//! written backward closures and the mathematics they claim to implement.

use super::{backward, Tape, Tensor};
use crate::error::{Error, Result};
use crate::num::Real;

/// Outcome of a gradient check.
#[derive(Debug, Clone)]
pub struct GradReport<T> {
    /// Largest relative error across all coordinates.
    pub max_rel_err: T,
    /// Coordinate index of the worst disagreement.
    pub worst_index: usize,
    pub analytic: T,
    pub numeric: T,
    /// Whether every coordinate stayed within the tolerance.
    pub pass: bool,
}

/// Compares analytic gradients of `f` against central differences.
///
/// `f` must map a tensor to a scalar tensor using tracked ops only. Each
/// coordinate `i` is perturbed by `±h` and the relative error is
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-12)`.
pub fn grad_check<T: Real, F>(f: F, input: &Tensor<T>, h: T, tol: T) -> Result<GradReport<T>>
where
    F: Fn(&Tensor<T>) -> Result<Tensor<T>>,
{
    let tape = Tape::new();
    let x = tape.watch(input);
    let y = f(&x)?;
    if y.shape() != [1, 1] {
        return Err(Error::NonScalar {
            shape: y.shape().to_vec(),
        });
    }
    let analytic: Vec<T> = if y.is_tracked() {
        let grads = backward(&y)?;
        match grads.wrt(&x) {
            Some(g) => g.to_vec(),
            // The output never saw the input; the true gradient is zero.
            None => vec![T::zero(); input.data().len()],
        }
    } else {
        // f ignored its input entirely (constant function).
        vec![T::zero(); input.data().len()]
    };
    let two_h = h + h;
    let floor = T::from(1e-12f64).unwrap();
    let mut report = GradReport {
        max_rel_err: T::zero(),
        worst_index: 0,
        analytic: T::zero(),
        numeric: T::zero(),
        pass: true,
    };
    for i in 0..input.data().len() {
        let mut plus = input.data().to_vec();
        plus[i] += h;
        let mut minus = input.data().to_vec();
        minus[i] -= h;
        let shape = input.shape();
        let y_plus = f(&Tensor::new(shape, plus))?.item()?;
        let y_minus = f(&Tensor::new(shape, minus))?.item()?;
        let numeric = (y_plus - y_minus) / two_h;
        let denom = analytic[i].abs().max(numeric.abs()).max(floor);
        let rel = (analytic[i] - numeric).abs() / denom;
        if rel > report.max_rel_err {
            report.max_rel_err = rel;
            report.worst_index = i;
            report.analytic = analytic[i];
            report.numeric = numeric;
        }
    }
    report.pass = report.max_rel_err <= tol;
    Ok(report)
}
