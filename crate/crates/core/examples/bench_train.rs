//! Times one end-to-end training run on the built-in scenario, printing
//! per-stage wall times and downstream scores. Handy when sizing the
//! scenario or tuning training defaults.

use std::time::Instant;

use trajrep::encoder::{encode_dataset, EncoderConfig};
use trajrep::eval::{evaluate, extract_instance_repr};
use trajrep::features::FeatureSelector;
use trajrep::rdp::segment_dataset;
use trajrep::synth::{scenario_dataset, Scenario};
use trajrep::train::{train, TrainConfig};

fn main() {
    let t0 = Instant::now();
    let sc = Scenario::default();
    let mut train_ds = scenario_dataset(&sc, 50, 1).unwrap();
    let test_ds = scenario_dataset(&sc, 50, 2).unwrap();
    println!(
        "generate: {:.2}s ({} train / {} test, t_max {})",
        t0.elapsed().as_secs_f64(),
        train_ds.len(),
        test_ds.len(),
        train_ds.t_max
    );

    let t1 = Instant::now();
    segment_dataset(&mut train_ds, 0.01).unwrap();
    println!("segment: {:.2}s", t1.elapsed().as_secs_f64());

    let cfg = TrainConfig {
        seed: 3,
        ..TrainConfig::default()
    };
    let enc = EncoderConfig::desk(FeatureSelector::ALL.cols());
    let t2 = Instant::now();
    let report = train(&train_ds, enc, &cfg).unwrap();
    let secs = t2.elapsed().as_secs_f64();
    println!(
        "train: {:.1}s, {} epochs ({:.2}s/epoch), loss {:.4} -> {:.4}, early stop {}",
        secs,
        report.loss_curve.len(),
        secs / report.loss_curve.len() as f64,
        report.loss_curve[0],
        report.loss_curve.last().unwrap(),
        report.stopped_early
    );

    let t3 = Instant::now();
    let train_r =
        extract_instance_repr(&encode_dataset(&train_ds, cfg.selector, &report.params).unwrap())
            .unwrap();
    let test_r =
        extract_instance_repr(&encode_dataset(&test_ds, cfg.selector, &report.params).unwrap())
            .unwrap();
    let scores = evaluate(
        &train_r,
        &train_ds.labels_i32(),
        &test_r,
        &test_ds.labels_i32(),
        1.0,
        None,
        cfg.seed,
    )
    .unwrap();
    println!(
        "evaluate: {:.2}s  acc {:.4}  nmi {:.4}  ari {:.4}",
        t3.elapsed().as_secs_f64(),
        scores.acc,
        scores.nmi,
        scores.ari
    );
    println!("total: {:.1}s", t0.elapsed().as_secs_f64());
}
