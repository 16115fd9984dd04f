//! Per-seed scores for the five-seed synthetic experiment, full features
//! vs positions only, to see which seeds drag the means and how many
//! epochs each run actually used before early stopping.

use std::time::Instant;

use trajrep::encoder::{encode_dataset, EncoderConfig};
use trajrep::eval::{evaluate, extract_instance_repr};
use trajrep::features::FeatureSelector;
use trajrep::rdp::segment_dataset;
use trajrep::synth::{scenario_dataset, Scenario};
use trajrep::train::{train, TrainConfig};

fn main() {
    let sc = Scenario::default();
    for selector in [FeatureSelector::ALL, FeatureSelector::POSITION_ONLY] {
        println!("--- features: {selector}");
        for seed in 0..5u64 {
            let t0 = Instant::now();
            let mut train_ds = scenario_dataset(&sc, 50, 1).unwrap();
            let mut test_ds = scenario_dataset(&sc, 50, 2).unwrap();
            segment_dataset(&mut train_ds, 0.01).unwrap();
            segment_dataset(&mut test_ds, 0.01).unwrap();
            let cfg = TrainConfig {
                tau: 0.1,
                epochs: 200,
                seed,
                selector,
                ..TrainConfig::default()
            };
            let report = train(&train_ds, EncoderConfig::desk(selector.cols()), &cfg).unwrap();
            let ztr = extract_instance_repr(
                &encode_dataset(&train_ds, selector, &report.params).unwrap(),
            )
            .unwrap();
            let zte = extract_instance_repr(
                &encode_dataset(&test_ds, selector, &report.params).unwrap(),
            )
            .unwrap();
            let scores = evaluate(
                &ztr,
                &train_ds.labels_i32(),
                &zte,
                &test_ds.labels_i32(),
                1.0,
                None,
                seed,
            )
            .unwrap();
            println!(
                "seed {seed}: acc {:.4} nmi {:.4} ari {:.4}  epochs {:3}  loss {:.4} -> {:.4}  {:.0} s",
                scores.acc,
                scores.nmi,
                scores.ari,
                report.loss_curve.len(),
                report.loss_curve.first().unwrap(),
                report.loss_curve.last().unwrap(),
                t0.elapsed().as_secs_f64()
            );
        }
    }
}
