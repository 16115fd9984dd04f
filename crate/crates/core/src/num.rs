//! Scalar abstraction for the numeric kernels.
//!
//! Every numeric kernel in this crate (distance computations, filters, the
//! tensor engine) is generic over [`Real`] so the same code runs in `f32`
//! or `f64`. The pipeline instantiates `f64` throughout — see
//! [`crate::Scalar`] — and `f32` stays available for the representation
//! export and for experiments.

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar the kernels are generic over.
///
/// The bound bundles what the kernels actually use: IEEE semantics with
/// NaN/∞ (`Float`), conversion from literals (`FromPrimitive`), compound
/// assignment, and thread-safety so per-item work can fan out.
pub trait Real:
    Float + FromPrimitive + NumAssign + Default + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    fn hypotenuse<T: Real>(a: T, b: T) -> T {
        (a * a + b * b).sqrt()
    }

    #[test]
    fn kernels_run_at_both_precisions() {
        assert_eq!(hypotenuse(3.0f32, 4.0f32), 5.0f32);
        assert_eq!(hypotenuse(3.0f64, 4.0f64), 5.0f64);
    }

    #[test]
    fn literal_conversion() {
        let x: f64 = <f64 as FromPrimitive>::from_f64(0.25).unwrap();
        assert_eq!(x, 0.25);
        let y: f32 = num_traits::NumCast::from(0.25f64).unwrap();
        assert_eq!(y, 0.25f32);
    }
}
