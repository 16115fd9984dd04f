//! Adam with decoupled weight decay.
//!
//! Each step applies, per parameter element:
//!
//! ```text
//! p ← p · (1 − lr·λ)                    (decay, decoupled from the gradient)
//! m ← β₁·m + (1−β₁)·g                   v ← β₂·v + (1−β₂)·g²
//! m̂ = m / (1−β₁ᵗ)                       v̂ = v / (1−β₂ᵗ)
//! p ← p − lr · m̂ / (√v̂ + ε)
//! ```
//!
//! State is allocated once from the parameter sizes and updated in place;
//! the whole step is deterministic and allocation-free.

use crate::error::{Error, Result};
use crate::num::Real;

/// Default first-moment decay.
pub const BETA1: f64 = 0.9;
/// Default second-moment decay.
pub const BETA2: f64 = 0.999;
/// Default denominator stabilizer.
pub const EPS: f64 = 1e-8;

/// Optimizer state for a fixed list of parameter blocks.
#[derive(Debug, Clone)]
pub struct AdamW<T> {
    lr: T,
    weight_decay: T,
    beta1: T,
    beta2: T,
    eps: T,
    t: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Real> AdamW<T> {
    /// Creates an optimizer for blocks of the given sizes with default betas.
    pub fn new(lr: T, weight_decay: T, sizes: &[usize]) -> Result<Self> {
        Self::with_betas(
            lr,
            weight_decay,
            T::from(BETA1).unwrap(),
            T::from(BETA2).unwrap(),
            T::from(EPS).unwrap(),
            sizes,
        )
    }

    pub fn with_betas(
        lr: T,
        weight_decay: T,
        beta1: T,
        beta2: T,
        eps: T,
        sizes: &[usize],
    ) -> Result<Self> {
        if lr <= T::zero() {
            return Err(Error::param("lr", "learning rate must be positive"));
        }
        if weight_decay < T::zero() {
            return Err(Error::param("weight-decay", "must be non-negative"));
        }
        for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
            if b < T::zero() || b >= T::one() {
                return Err(Error::param(name, "must lie in [0, 1)"));
            }
        }
        if eps <= T::zero() {
            return Err(Error::param("eps", "must be positive"));
        }
        Ok(AdamW {
            lr,
            weight_decay,
            beta1,
            beta2,
            eps,
            t: 0,
            m: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
        })
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// Applies one update across all blocks.
    ///
    /// `params` and `grads` must match the sizes the optimizer was built
    /// with, block for block.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::LengthMismatch {
                left: params.len(),
                right: self.m.len(),
            });
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != self.m[i].len() {
                return Err(Error::LengthMismatch {
                    left: p.len(),
                    right: self.m[i].len(),
                });
            }
        }
        self.t += 1;
        let one = T::one();
        let shrink = one - self.lr * self.weight_decay;
        let bc1 = one - self.beta1.powi(self.t as i32);
        let bc2 = one - self.beta2.powi(self.t as i32);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (ms, vs) = (&mut self.m[i], &mut self.v[i]);
            for (((pv, &gv), mv), vv) in p.iter_mut().zip(*g).zip(ms).zip(vs) {
                *pv *= shrink;
                *mv = self.beta1 * *mv + (one - self.beta1) * gv;
                *vv = self.beta2 * *vv + (one - self.beta2) * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *pv -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
