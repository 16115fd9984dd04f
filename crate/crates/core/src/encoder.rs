//! Causal transformer encoder over per-timestep features.
//!
//! The encoder maps a feature sequence `[T × F]` to a representation
//! sequence `[T × K]`:
//!
//! 1. optional input gating (training only): randomly chosen timesteps are
//!    zeroed at the input, the first timestep never among them;
//! 2. linear projection `F → E` followed by a token-wise L2 norm;
//! 3. a stack of pre-norm blocks — masked multi-head attention and a GELU
//!    feed-forward, each with a residual connection;
//! 4. final layer norm, projection `E → K`, and a second L2 norm so
//!    representations live on the unit sphere.
//!
//! There is no positional encoding of any kind: the causal mask alone
//! breaks temporal symmetry. Attention masks are additive (`0` allowed,
//! `-1e9` excluded) and compose three sources — causality, key padding,
//! and randomly dropped timesteps. Dropped or padded positions are
//! excluded as *keys* only; every query row still computes, so every
//! timestep yields a representation.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::tensor::{
    add, concat, dropout_mask_apply, gelu, l2_normalize, layer_norm, masked_softmax, matmul,
    scale, slice, transpose, Tape, Tensor,
};

/// Additive mask value for excluded attention slots.
pub const MASK_NEG: f64 = -1e9;
/// Layer-norm variance stabilizer.
pub const LN_EPS: f64 = 1e-5;

/// Architecture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderConfig {
    /// Feature columns per timestep.
    pub input_dim: usize,
    /// Model (embedding) width E.
    pub model_dim: usize,
    /// Feed-forward hidden width.
    pub ff_dim: usize,
    /// Number of blocks.
    pub layers: usize,
    /// Attention heads; must divide `model_dim`.
    pub heads: usize,
    /// Representation width K.
    pub repr_dim: usize,
    /// Dropout probability on attention weights (training only).
    pub attn_dropout: f64,
    /// Probability of zeroing a timestep at the input (training only).
    pub mask_prob: f64,
}

impl EncoderConfig {
    /// Small configuration for workstation-scale experiments.
    pub fn desk(input_dim: usize) -> Self {
        EncoderConfig {
            input_dim,
            model_dim: 64,
            ff_dim: 256,
            layers: 2,
            heads: 4,
            repr_dim: 32,
            attn_dropout: 0.35,
            mask_prob: 0.2,
        }
    }

    /// Full-scale configuration.
    pub fn full(input_dim: usize) -> Self {
        EncoderConfig {
            input_dim,
            model_dim: 768,
            ff_dim: 3072,
            layers: 12,
            heads: 12,
            repr_dim: 320,
            attn_dropout: 0.35,
            mask_prob: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0
            || self.model_dim == 0
            || self.ff_dim == 0
            || self.layers == 0
            || self.heads == 0
            || self.repr_dim == 0
        {
            return Err(Error::param("encoder", "all dimensions must be positive"));
        }
        if self.model_dim % self.heads != 0 {
            return Err(Error::param(
                "heads",
                format!("{} does not divide model_dim {}", self.heads, self.model_dim),
            ));
        }
        for (name, p) in [("attn_dropout", self.attn_dropout), ("mask_prob", self.mask_prob)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::param("encoder", format!("{name} = {p} outside [0, 1)")));
            }
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim / self.heads
    }
}

/// One named parameter matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor<T> {
    pub shape: [usize; 2],
    pub data: Vec<T>,
}

impl<T: Real> ParamTensor<T> {
    fn zeros(shape: [usize; 2]) -> Self {
        ParamTensor {
            shape,
            data: vec![T::zero(); shape[0] * shape[1]],
        }
    }

    fn ones(shape: [usize; 2]) -> Self {
        ParamTensor {
            shape,
            data: vec![T::one(); shape[0] * shape[1]],
        }
    }

    fn gaussian(shape: [usize; 2], std: f64, rng: &mut impl Rng) -> Self {
        let dist = Normal::new(0.0, std).expect("valid std");
        ParamTensor {
            shape,
            data: (0..shape[0] * shape[1])
                .map(|_| T::from(dist.sample(rng)).unwrap())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Parameters of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams<T> {
    pub ln1_g: ParamTensor<T>,
    pub ln1_b: ParamTensor<T>,
    pub wq: ParamTensor<T>,
    pub bq: ParamTensor<T>,
    pub wk: ParamTensor<T>,
    pub bk: ParamTensor<T>,
    pub wv: ParamTensor<T>,
    pub bv: ParamTensor<T>,
    pub wo: ParamTensor<T>,
    pub bo: ParamTensor<T>,
    pub ln2_g: ParamTensor<T>,
    pub ln2_b: ParamTensor<T>,
    pub ff_w1: ParamTensor<T>,
    pub ff_b1: ParamTensor<T>,
    pub ff_w2: ParamTensor<T>,
    pub ff_b2: ParamTensor<T>,
}

/// Full parameter set plus its architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams<T> {
    pub config: EncoderConfig,
    pub input_w: ParamTensor<T>,
    pub input_b: ParamTensor<T>,
    pub blocks: Vec<BlockParams<T>>,
    pub final_g: ParamTensor<T>,
    pub final_b: ParamTensor<T>,
    pub out_w: ParamTensor<T>,
    pub out_b: ParamTensor<T>,
}

impl<T: Real> EncoderParams<T> {
    /// Fresh parameters: `N(0, 0.02)` weights, zero biases, unit gains.
    ///
    /// Draw order is fixed (the [`Self::named`] order), so equal seeds give
    /// equal parameters.
    pub fn init(config: EncoderConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let (f, e, ff, k) = (
            config.input_dim,
            config.model_dim,
            config.ff_dim,
            config.repr_dim,
        );
        const STD: f64 = 0.02;
        let input_w = ParamTensor::gaussian([f, e], STD, rng);
        let input_b = ParamTensor::zeros([1, e]);
        let blocks = (0..config.layers)
            .map(|_| BlockParams {
                ln1_g: ParamTensor::ones([1, e]),
                ln1_b: ParamTensor::zeros([1, e]),
                wq: ParamTensor::gaussian([e, e], STD, rng),
                bq: ParamTensor::zeros([1, e]),
                wk: ParamTensor::gaussian([e, e], STD, rng),
                bk: ParamTensor::zeros([1, e]),
                wv: ParamTensor::gaussian([e, e], STD, rng),
                bv: ParamTensor::zeros([1, e]),
                wo: ParamTensor::gaussian([e, e], STD, rng),
                bo: ParamTensor::zeros([1, e]),
                ln2_g: ParamTensor::ones([1, e]),
                ln2_b: ParamTensor::zeros([1, e]),
                ff_w1: ParamTensor::gaussian([e, ff], STD, rng),
                ff_b1: ParamTensor::zeros([1, ff]),
                ff_w2: ParamTensor::gaussian([ff, e], STD, rng),
                ff_b2: ParamTensor::zeros([1, e]),
            })
            .collect();
        Ok(EncoderParams {
            config,
            input_w,
            input_b,
            blocks,
            final_g: ParamTensor::ones([1, e]),
            final_b: ParamTensor::zeros([1, e]),
            out_w: ParamTensor::gaussian([e, k], STD, rng),
            out_b: ParamTensor::zeros([1, k]),
        })
    }

    /// All parameters with stable names, in a fixed order shared by the
    /// optimizer, checkpoints and gradient collection.
    pub fn named(&self) -> Vec<(String, &ParamTensor<T>)> {
        let mut out: Vec<(String, &ParamTensor<T>)> = vec![
            ("input.w".into(), &self.input_w),
            ("input.b".into(), &self.input_b),
        ];
        for (i, b) in self.blocks.iter().enumerate() {
            for (suffix, p) in [
                ("ln1.g", &b.ln1_g),
                ("ln1.b", &b.ln1_b),
                ("attn.wq", &b.wq),
                ("attn.bq", &b.bq),
                ("attn.wk", &b.wk),
                ("attn.bk", &b.bk),
                ("attn.wv", &b.wv),
                ("attn.bv", &b.bv),
                ("attn.wo", &b.wo),
                ("attn.bo", &b.bo),
                ("ln2.g", &b.ln2_g),
                ("ln2.b", &b.ln2_b),
                ("ff.w1", &b.ff_w1),
                ("ff.b1", &b.ff_b1),
                ("ff.w2", &b.ff_w2),
                ("ff.b2", &b.ff_b2),
            ] {
                out.push((format!("block{i}.{suffix}"), p));
            }
        }
        out.push(("final.g".into(), &self.final_g));
        out.push(("final.b".into(), &self.final_b));
        out.push(("out.w".into(), &self.out_w));
        out.push(("out.b".into(), &self.out_b));
        out
    }

    /// Mutable view in the same order as [`Self::named`].
    pub fn named_mut(&mut self) -> Vec<(String, &mut ParamTensor<T>)> {
        let mut out: Vec<(String, &mut ParamTensor<T>)> = vec![
            ("input.w".into(), &mut self.input_w),
            ("input.b".into(), &mut self.input_b),
        ];
        for (i, b) in self.blocks.iter_mut().enumerate() {
            for (suffix, p) in [
                ("ln1.g", &mut b.ln1_g),
                ("ln1.b", &mut b.ln1_b),
                ("attn.wq", &mut b.wq),
                ("attn.bq", &mut b.bq),
                ("attn.wk", &mut b.wk),
                ("attn.bk", &mut b.bk),
                ("attn.wv", &mut b.wv),
                ("attn.bv", &mut b.bv),
                ("attn.wo", &mut b.wo),
                ("attn.bo", &mut b.bo),
                ("ln2.g", &mut b.ln2_g),
                ("ln2.b", &mut b.ln2_b),
                ("ff.w1", &mut b.ff_w1),
                ("ff.b1", &mut b.ff_b1),
                ("ff.w2", &mut b.ff_w2),
                ("ff.b2", &mut b.ff_b2),
            ] {
                out.push((format!("block{i}.{suffix}"), p));
            }
        }
        out.push(("final.g".into(), &mut self.final_g));
        out.push(("final.b".into(), &mut self.final_b));
        out.push(("out.w".into(), &mut self.out_w));
        out.push(("out.b".into(), &mut self.out_b));
        out
    }

    pub fn param_count(&self) -> usize {
        self.named().iter().map(|(_, p)| p.len()).sum()
    }

    /// Materializes the parameters as tensors, tracked on `tape` when one
    /// is given (training) or as plain constants (evaluation).
    pub fn as_tensors(&self, tape: Option<&Tape<T>>) -> Vec<Tensor<T>> {
        self.named()
            .into_iter()
            .map(|(_, p)| {
                let t = Tensor::new(p.shape, p.data.clone());
                match tape {
                    Some(tape) => tape.watch(&t),
                    None => t,
                }
            })
            .collect()
    }
}

/// Per-timestep keep bits for input gating.
///
/// Each timestep is independently dropped with probability `mask_prob`,
/// except the first, which is always kept so no sequence starts blind.
pub fn sample_keep_mask(len: usize, mask_prob: f64, rng: &mut impl Rng) -> Vec<bool> {
    (0..len)
        .map(|t| t == 0 || rng.random::<f64>() >= mask_prob)
        .collect()
}

/// Builds the additive attention mask for one sequence.
///
/// `t` is the (possibly padded) sequence length, `valid_len` the number of
/// real timesteps, and `keep` the per-timestep input gate (`None` means
/// all kept). Slot `(q, k)` is open iff `k <= q` (causality), `k <
/// valid_len` (padding) and `keep[k]` (gating). Queries are never masked:
/// padded or dropped rows still compute, they are just invisible to
/// others.
pub fn build_attention_mask<T: Real>(t: usize, valid_len: usize, keep: Option<&[bool]>) -> Tensor<T> {
    let neg = T::from(MASK_NEG).unwrap();
    let mut data = vec![T::zero(); t * t];
    for q in 0..t {
        for k in 0..t {
            let open = k <= q && k < valid_len && keep.map_or(true, |m| m[k]);
            if !open {
                data[q * t + k] = neg;
            }
        }
    }
    Tensor::new([t, t], data)
}

/// Pre-sampled training-time noise for one sequence.
pub struct ForwardNoise<T: Real> {
    /// `[t, 1]` input gate: 1 keeps a timestep, 0 zeroes it.
    pub input_keep: Tensor<T>,
    /// Keep bits behind `input_keep`, for mask building.
    pub keep_bits: Vec<bool>,
    /// `[layer][head]` inverted-dropout masks over attention weights.
    pub attn_drop: Vec<Vec<Tensor<T>>>,
}

/// Draws input gating and attention dropout for a sequence of length `t`.
///
/// Draw order is fixed: keep bits first, then dropout masks layer-major,
/// head-minor, row-major — so equal seeds give equal noise.
pub fn sample_noise<T: Real>(cfg: &EncoderConfig, t: usize, rng: &mut impl Rng) -> ForwardNoise<T> {
    let keep_bits = sample_keep_mask(t, cfg.mask_prob, rng);
    let input_keep = Tensor::col(
        keep_bits
            .iter()
            .map(|&k| if k { T::one() } else { T::zero() })
            .collect(),
    );
    let p = cfg.attn_dropout;
    let inv = T::from(1.0 / (1.0 - p)).unwrap();
    let attn_drop = (0..cfg.layers)
        .map(|_| {
            (0..cfg.heads)
                .map(|_| {
                    Tensor::new(
                        [t, t],
                        (0..t * t)
                            .map(|_| if rng.random::<f64>() < p { T::zero() } else { inv })
                            .collect(),
                    )
                })
                .collect()
        })
        .collect();
    ForwardNoise {
        input_keep,
        keep_bits,
        attn_drop,
    }
}

/// Runs the encoder over one sequence.
///
/// `tensors` must come from [`EncoderParams::as_tensors`]; `x` is `[t, F]`
/// and must contain no NaN (callers slice off or zero padding first);
/// `attn_mask` is `[t, t]` additive. `noise` enables training behavior —
/// input gating and attention dropout; evaluation passes `None`.
pub fn forward<T: Real>(
    tensors: &[Tensor<T>],
    cfg: &EncoderConfig,
    x: &Tensor<T>,
    attn_mask: &Tensor<T>,
    noise: Option<&ForwardNoise<T>>,
) -> Result<Tensor<T>> {
    if x.cols() != cfg.input_dim {
        return Err(Error::ShapeMismatch {
            left: x.shape().to_vec(),
            right: vec![x.rows(), cfg.input_dim],
        });
    }
    let t = x.rows();
    if attn_mask.shape() != [t, t] {
        return Err(Error::ShapeMismatch {
            left: attn_mask.shape().to_vec(),
            right: vec![t, t],
        });
    }
    let eps = T::from(LN_EPS).unwrap();
    let dh = cfg.head_dim();
    let inv_sqrt_dh = T::from(1.0 / (dh as f64).sqrt()).unwrap();
    let mut idx = tensors.iter();
    let mut next = || idx.next().expect("tensor list matches architecture");
    let (input_w, input_b) = (next(), next());

    let gated;
    let x = match noise {
        Some(n) => {
            gated = dropout_mask_apply(x, &n.input_keep)?;
            &gated
        }
        None => x,
    };
    let mut h = l2_normalize(&add(&matmul(x, input_w)?, input_b)?);

    for layer in 0..cfg.layers {
        let (ln1_g, ln1_b) = (next(), next());
        let (wq, bq, wk, bk, wv, bv, wo, bo) =
            (next(), next(), next(), next(), next(), next(), next(), next());
        let (ln2_g, ln2_b) = (next(), next());
        let (ff_w1, ff_b1, ff_w2, ff_b2) = (next(), next(), next(), next());

        let a = layer_norm(&h, ln1_g, ln1_b, eps)?;
        let q = add(&matmul(&a, wq)?, bq)?;
        let k = add(&matmul(&a, wk)?, bk)?;
        let v = add(&matmul(&a, wv)?, bv)?;
        let mut heads = Vec::with_capacity(cfg.heads);
        for head in 0..cfg.heads {
            let qh = slice(&q, 1, head * dh, dh)?;
            let kh = slice(&k, 1, head * dh, dh)?;
            let vh = slice(&v, 1, head * dh, dh)?;
            let scores = scale(&matmul(&qh, &transpose(&kh))?, inv_sqrt_dh);
            let mut probs = masked_softmax(&scores, attn_mask)?;
            if let Some(n) = noise {
                probs = dropout_mask_apply(&probs, &n.attn_drop[layer][head])?;
            }
            heads.push(matmul(&probs, &vh)?);
        }
        let head_refs: Vec<&Tensor<T>> = heads.iter().collect();
        let ctx = concat(1, &head_refs)?;
        let attn_out = add(&matmul(&ctx, wo)?, bo)?;
        h = add(&h, &attn_out)?;

        let f = layer_norm(&h, ln2_g, ln2_b, eps)?;
        let ff = add(
            &matmul(&gelu(&add(&matmul(&f, ff_w1)?, ff_b1)?), ff_w2)?,
            ff_b2,
        )?;
        h = add(&h, &ff)?;
    }

    let (final_g, final_b) = (next(), next());
    let (out_w, out_b) = (next(), next());
    let h = layer_norm(&h, final_g, final_b, eps)?;
    Ok(l2_normalize(&add(&matmul(&h, out_w)?, out_b)?))
}

/// One instance's representation sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ReprSeq<T> {
    pub len: usize,
    pub dim: usize,
    pub rows: Vec<T>,
}

/// Encodes every instance of a dataset in evaluation mode.
///
/// Instances are processed at their valid length (no padding enters the
/// math) with plain causal masks and no dropout of any kind.
pub fn encode_dataset<T: Real>(
    ds: &crate::traj::Dataset,
    selector: crate::features::FeatureSelector,
    params: &EncoderParams<T>,
) -> Result<Vec<ReprSeq<T>>> {
    params.config.validate()?;
    if params.config.input_dim != selector.cols() {
        return Err(Error::param(
            "features",
            format!(
                "encoder expects {} feature columns, selector `{selector}` yields {}",
                params.config.input_dim,
                selector.cols()
            ),
        ));
    }
    let tensors = params.as_tensors(None);
    let mut out = Vec::with_capacity(ds.len());
    for i in 0..ds.len() {
        let states: Vec<[T; 3]> = (0..ds.lengths[i])
            .map(|t| {
                let s = ds.state(i, t);
                [
                    T::from(s[0]).unwrap(),
                    T::from(s[1]).unwrap(),
                    T::from(s[2]).unwrap(),
                ]
            })
            .collect();
        let feats = crate::features::assemble_features(&states, selector)?;
        let x = Tensor::new([feats.len, feats.cols], feats.rows);
        let mask = build_attention_mask::<T>(feats.len, feats.len, None);
        let z = forward(&tensors, &params.config, &x, &mask, None)?;
        out.push(ReprSeq {
            len: z.rows(),
            dim: z.cols(),
            rows: z.data().to_vec(),
        });
    }
    Ok(out)
}
