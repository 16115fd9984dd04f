//! Self-supervised training loop and the (ε, τ) grid search.
//!
//! One run: initialize encoder parameters from the seed, then for each
//! epoch shuffle the instance order, cut it into batches, and for every
//! batch encode each instance in training mode (input gating + attention
//! dropout), flatten the valid timesteps with globally remapped segment
//! ids, evaluate the soft-nearest-neighbor loss, backpropagate, and take
//! one AdamW step. The per-epoch mean batch loss forms the loss curve;
//! training stops early when that mean has not improved for `patience`
//! consecutive epochs. Everything — init, shuffling, gating, dropout —
//! draws from one seeded ChaCha stream, so runs are bit-reproducible.
//!
//! The grid search re-segments the training split at each ε, trains one
//! desk-scale model per (ε, τ) cell, and scores it on a held-out
//! validation split (classification accuracy, then clustering NMI as the
//! tie-break). Cells whose ε collapses every trajectory to a single
//! segment are marked failed without training, as are cells whose
//! training errors out; the search continues past them.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoder::{
    build_attention_mask, encode_dataset, forward, sample_noise, EncoderConfig, EncoderParams,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, extract_instance_repr};
use crate::features::FeatureSelector;
use crate::loss::{flatten_batch, snn_loss, LossVariant};
use crate::optim::AdamW;
use crate::rdp::segment_dataset;
use crate::tensor::{backward, Tape, Tensor};
use crate::traj::{pad_dataset, split_by_hash, strip_padding, Dataset};
use crate::Scalar;

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr: Scalar,
    pub weight_decay: Scalar,
    pub tau: Scalar,
    pub epochs: usize,
    /// Early-stop patience in epochs; 0 disables early stopping.
    pub patience: usize,
    pub seed: u64,
    pub variant: LossVariant,
    pub selector: FeatureSelector,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 16,
            lr: 1e-3,
            weight_decay: 0.01,
            tau: 0.1,
            epochs: 200,
            patience: 20,
            seed: 0,
            variant: LossVariant::Modified,
            selector: FeatureSelector::ALL,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::param(
                "batch-size",
                "instance-wise negatives require at least 2 instances per batch",
            ));
        }
        if self.tau <= 0.0 {
            return Err(Error::param("tau", "temperature must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs", "at least one epoch is required"));
        }
        Ok(())
    }
}

/// A finished training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub params: EncoderParams<Scalar>,
    /// Mean batch loss per completed epoch.
    pub loss_curve: Vec<Scalar>,
    pub stopped_early: bool,
}

/// Trains a fresh encoder on a segmented dataset.
pub fn train(ds: &Dataset, enc: EncoderConfig, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    enc.validate()?;
    if enc.input_dim != cfg.selector.cols() {
        return Err(Error::param(
            "features",
            format!(
                "encoder expects {} feature columns, selector `{}` yields {}",
                enc.input_dim,
                cfg.selector,
                cfg.selector.cols()
            ),
        ));
    }
    let seg_ids = ds
        .segment_ids
        .as_ref()
        .ok_or_else(|| Error::param("train", "dataset carries no segment ids"))?;
    if ds.len() == 0 {
        return Err(Error::EmptyDataset);
    }

    // Per-instance feature tensors, assembled once.
    let mut feats: Vec<Tensor<Scalar>> = Vec::with_capacity(ds.len());
    for i in 0..ds.len() {
        let states: Vec<[Scalar; 3]> = (0..ds.lengths[i]).map(|t| ds.state(i, t)).collect();
        let f = crate::features::assemble_features(&states, cfg.selector)?;
        feats.push(Tensor::new([f.len, f.cols], f.rows));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = EncoderParams::<Scalar>::init(enc, &mut rng)?;
    let sizes: Vec<usize> = params.named().iter().map(|(_, p)| p.len()).collect();
    let mut opt = AdamW::new(cfg.lr, cfg.weight_decay, &sizes)?;

    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut best = Scalar::INFINITY;
    let mut stale = 0usize;
    let mut stopped_early = false;
    let mut order: Vec<usize> = (0..ds.len()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let tape = Tape::new();
            let tensors = params.as_tensors(Some(&tape));
            let mut outputs = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let t = ds.lengths[i];
                let noise = sample_noise(&enc, t, &mut rng);
                let mask = build_attention_mask(t, t, Some(&noise.keep_bits));
                outputs.push(forward(&tensors, &enc, &feats[i], &mask, Some(&noise))?);
            }
            let parts: Vec<(&Tensor<Scalar>, &[u32])> = chunk
                .iter()
                .zip(&outputs)
                .map(|(&i, z)| (z, seg_ids[i].as_slice()))
                .collect();
            let flat = flatten_batch(&parts)?;
            let loss = snn_loss(&flat.z, &flat.ids, cfg.tau, cfg.variant)?;
            let value = loss.item()?;
            if !value.is_finite() {
                return Err(Error::param(
                    "train",
                    format!("non-finite loss at epoch {epoch}"),
                ));
            }
            let grads = backward(&loss)?;
            let grad_vecs: Vec<Vec<Scalar>> = tensors
                .iter()
                .map(|t| {
                    grads
                        .wrt(t)
                        .map(|g| g.to_vec())
                        .unwrap_or_else(|| vec![0.0; t.data().len()])
                })
                .collect();
            let grad_refs: Vec<&[Scalar]> = grad_vecs.iter().map(|g| g.as_slice()).collect();
            let mut named = params.named_mut();
            let mut slices: Vec<&mut [Scalar]> = named
                .iter_mut()
                .map(|(_, p)| p.data.as_mut_slice())
                .collect();
            opt.step(&mut slices, &grad_refs)?;
            epoch_sum += value;
            batches += 1;
        }
        let mean = epoch_sum / batches as Scalar;
        log::debug!("epoch {epoch}: mean loss {mean:.6}");
        curve.push(mean);
        if mean < best {
            best = mean;
            stale = 0;
        } else {
            stale += 1;
            if cfg.patience > 0 && stale >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    Ok(TrainReport {
        params,
        loss_curve: curve,
        stopped_early,
    })
}

/// One evaluated grid cell.
#[derive(Debug, Clone)]
pub struct GridCell {
    pub epsilon: Scalar,
    pub tau: Scalar,
    pub accuracy: Option<Scalar>,
    pub nmi: Option<Scalar>,
    /// Why this cell produced no scores, when it failed.
    pub failure: Option<String>,
}

/// Grid-search outcome: every cell plus the winning coordinates.
#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub cells: Vec<GridCell>,
    /// `(epsilon, tau)` of the best cell by accuracy, NMI tie-break.
    pub best: Option<(Scalar, Scalar)>,
    pub holdout_fraction: Scalar,
}

/// Trains one model per (ε, τ) cell and scores it on a hash-based
/// validation split of the labeled input.
pub fn grid_search(
    ds: &Dataset,
    enc: EncoderConfig,
    base: &TrainConfig,
    eps_grid: &[Scalar],
    tau_grid: &[Scalar],
    holdout_fraction: Scalar,
) -> Result<GridOutcome> {
    if eps_grid.is_empty() || tau_grid.is_empty() {
        return Err(Error::param("grid", "both grids need at least one value"));
    }
    if !(0.0..1.0).contains(&holdout_fraction) || holdout_fraction == 0.0 {
        return Err(Error::param("holdout", "fraction must lie in (0, 1)"));
    }
    if ds.labels.iter().any(|l| l.is_none()) {
        return Err(Error::param(
            "gridsearch",
            "every instance needs a label to score grid cells",
        ));
    }
    let (fit_part, val_part) = split_by_hash(strip_padding(ds), holdout_fraction);
    if fit_part.is_empty() || val_part.is_empty() {
        return Err(Error::param(
            "holdout",
            format!(
                "split produced {} fit / {} validation instances; adjust the fraction",
                fit_part.len(),
                val_part.len()
            ),
        ));
    }
    let fit_base = pad_dataset(fit_part)?;
    let val_ds = pad_dataset(val_part)?;
    let fit_labels = fit_base.labels_i32();
    let val_labels = val_ds.labels_i32();

    let mut cells = Vec::with_capacity(eps_grid.len() * tau_grid.len());
    for &eps in eps_grid {
        let mut fit_ds = fit_base.clone();
        let seg_counts = segment_dataset(&mut fit_ds, eps)?;
        let degenerate = seg_counts.iter().all(|&c| c == 1);
        for &tau in tau_grid {
            if degenerate {
                cells.push(GridCell {
                    epsilon: eps,
                    tau,
                    accuracy: None,
                    nmi: None,
                    failure: Some("degenerate epsilon: every instance is one segment".into()),
                });
                continue;
            }
            let cfg = TrainConfig {
                tau,
                ..base.clone()
            };
            let cell = run_cell(&fit_ds, &fit_labels, &val_ds, &val_labels, enc, &cfg);
            cells.push(match cell {
                Ok((acc, nmi)) => GridCell {
                    epsilon: eps,
                    tau,
                    accuracy: Some(acc),
                    nmi: Some(nmi),
                    failure: None,
                },
                Err(e) => GridCell {
                    epsilon: eps,
                    tau,
                    accuracy: None,
                    nmi: None,
                    failure: Some(e.to_string()),
                },
            });
        }
    }

    let best = cells
        .iter()
        .filter(|c| c.failure.is_none())
        .max_by(|a, b| {
            let key_a = (a.accuracy.unwrap(), a.nmi.unwrap());
            let key_b = (b.accuracy.unwrap(), b.nmi.unwrap());
            key_a
                .partial_cmp(&key_b)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|c| (c.epsilon, c.tau));

    Ok(GridOutcome {
        cells,
        best,
        holdout_fraction,
    })
}

fn run_cell(
    fit_ds: &Dataset,
    fit_labels: &[i32],
    val_ds: &Dataset,
    val_labels: &[i32],
    enc: EncoderConfig,
    cfg: &TrainConfig,
) -> Result<(Scalar, Scalar)> {
    let report = train(fit_ds, enc, cfg)?;
    let fit_reprs = extract_instance_repr(&encode_dataset(fit_ds, cfg.selector, &report.params)?)?;
    let val_reprs = extract_instance_repr(&encode_dataset(val_ds, cfg.selector, &report.params)?)?;
    let scores = evaluate(
        &fit_reprs,
        fit_labels,
        &val_reprs,
        val_labels,
        1.0,
        None,
        cfg.seed,
    )?;
    Ok((scores.acc, scores.nmi))
}
