//! Trajectory representation learning for terminal-area air traffic.
//!
//! The crate turns raw surveillance records into compact per-flight
//! embeddings and evaluates how well those embeddings separate traffic
//! patterns. The pieces compose as a pipeline:
//!
//! 1. [`preprocess`] — project geodetic records into a local tangent frame,
//!    bound, resample to 1 Hz, de-spike, smooth and scale them.
//! 2. [`rdp`] — mark geometric corner points per trajectory and derive
//!    per-step segment ids from the corner mask.
//! 3. [`features`] — expand positions into path-direction and polar
//!    components.
//! 4. [`encoder`] / [`loss`] / [`train`] — a causal transformer encoder
//!    trained so that states sharing a segment agree and states from
//!    different segments repel.
//! 5. [`eval`] — SVM classification, k-means clustering and information
//!    metrics over the learned per-flight representations.
//!
//! [`synth`] generates labeled synthetic terminal-area traffic so the whole
//! chain can be exercised without real data, and [`io`] pins the on-disk
//! formats (dataset container, checkpoint, representation export, CSV
//! interchange).
//!
//! Numeric kernels are generic over the scalar type via [`Real`]; the
//! pipeline itself runs in `f64` (see [`Scalar`]).

pub mod encoder;
pub mod enu;
pub mod error;
pub mod eval;
pub mod features;
pub mod io;
mod linalg;
pub mod loss;
pub mod num;
pub mod optim;
pub mod preprocess;
pub mod rdp;
pub mod savgol;
pub mod synth;
pub mod tensor;
pub mod traj;
pub mod train;

pub use error::{Error, Result};
pub use num::Real;

/// Scalar precision the pipeline runs at.
///
/// Training, preprocessing and evaluation all happen in `f64`; the
/// representation export downcasts to `f32` at the file boundary and
/// nowhere else.
pub type Scalar = f64;

/// Tensor type at pipeline precision.
pub type TensorF = tensor::Tensor<Scalar>;
