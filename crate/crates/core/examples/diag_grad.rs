//! Probes the encoder + loss composition gradient at several step sizes to
//! separate finite-difference truncation from genuine gradient error: if
//! the worst relative error shrinks like h², the analytic side is right.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trajrep::encoder::{build_attention_mask, forward, EncoderConfig, EncoderParams};
use trajrep::loss::{flatten_batch, snn_loss, LossVariant};
use trajrep::tensor::{grad_check, slice, Tensor};

fn rand_tensor(rng: &mut ChaCha8Rng, shape: [usize; 2], lo: f64, hi: f64) -> Tensor<f64> {
    use rand::Rng;
    let data = (0..shape[0] * shape[1])
        .map(|_| lo + (hi - lo) * rng.random::<f64>())
        .collect();
    Tensor::new(shape, data)
}

fn main() {
    for tau in [0.1, 0.3, 0.5] {
        for seed in 330..350 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = EncoderConfig::desk(9);
            let params = EncoderParams::init(cfg, &mut rng).unwrap();
            let tensors = params.as_tensors(None);
            let x0 = rand_tensor(&mut rng, [7, 9], -0.8, 0.8);
            let ids_a: &[u32] = &[1, 1, 2];
            let ids_b: &[u32] = &[1, 2, 2, 2];
            let f = move |x: &Tensor<f64>| {
                let xa = slice(x, 0, 0, 3)?;
                let xb = slice(x, 0, 3, 4)?;
                let za =
                    forward(&tensors, &cfg, &xa, &build_attention_mask(3, 3, None), None)?;
                let zb =
                    forward(&tensors, &cfg, &xb, &build_attention_mask(4, 4, None), None)?;
                let fb = flatten_batch(&[(&za, ids_a), (&zb, ids_b)])?;
                snn_loss(&fb.z, &fb.ids, tau, LossVariant::Modified)
            };
            let r = grad_check(&f, &x0, 1e-3, 1e-4).unwrap();
            println!(
                "tau {tau} seed {seed}: max_rel {:.3e} at {} (analytic {:+.4e}) {}",
                r.max_rel_err,
                r.worst_index,
                r.analytic,
                if r.pass { "PASS" } else { "fail" }
            );
        }
    }
}
