//! Diagnoses the clustering geometry of learned representations: trains on
//! the default scenario, then prints the class-centroid distance matrix,
//! within-class spread, and the k-means contingency table so scenario
//! retuning can target the classes that actually merge.

use trajrep::encoder::{encode_dataset, EncoderConfig};
use trajrep::eval::{extract_instance_repr, kmeans::kmeans, InstanceRepr};
use trajrep::features::FeatureSelector;
use trajrep::rdp::segment_dataset;
use trajrep::synth::{scenario_dataset, Scenario};
use trajrep::train::{train, TrainConfig};
use trajrep::Scalar;

fn centroids(x: &InstanceRepr<Scalar>, labels: &[i32], k: usize) -> Vec<Vec<Scalar>> {
    let mut sums = vec![vec![0.0; x.k]; k];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l as usize] += 1;
        for (s, &v) in sums[l as usize].iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        for v in s.iter_mut() {
            *v /= c as Scalar;
        }
    }
    sums
}

fn dist(a: &[Scalar], b: &[Scalar]) -> Scalar {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<Scalar>()
        .sqrt()
}

fn diagnose(tag: &str, x: &InstanceRepr<Scalar>, labels: &[i32], seed: u64) {
    let k = 4usize;
    let cents = centroids(x, labels, k);
    println!("== {tag} ==");
    println!("centroid distances:");
    for a in 0..k {
        let row: Vec<String> = (0..k)
            .map(|b| format!("{:.4}", dist(&cents[a], &cents[b])))
            .collect();
        println!("  class {a}: {}", row.join("  "));
    }
    let mut spread = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        spread[l as usize] += dist(x.row(i), &cents[l as usize]);
        counts[l as usize] += 1;
    }
    for c in 0..k {
        println!(
            "  class {c} mean within-distance: {:.4}",
            spread[c] / counts[c] as Scalar
        );
    }
    let fit = kmeans(x, k, seed).unwrap();
    let mut table = vec![vec![0usize; k]; k];
    for (i, &l) in labels.iter().enumerate() {
        table[l as usize][fit.assignments[i]] += 1;
    }
    println!("contingency (rows = true class, cols = cluster):");
    for (c, row) in table.iter().enumerate() {
        println!("  class {c}: {row:?}");
    }
}

/// Args: `[train_seed] [gen_seed_train] [gen_seed_test] [features]`,
/// defaulting to `3 1 2 all`.
fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let num = |i: usize, d: u64| args.get(i).map_or(d, |s| s.parse().unwrap());
    let train_seed = num(0, 3);
    let gen_train = num(1, 1);
    let gen_test = num(2, 2);
    let selector: FeatureSelector = args.get(3).map_or(FeatureSelector::ALL, |s| {
        s.parse().expect("features: pos | pos+path | pos+polar | all")
    });

    let sc = Scenario::default();
    let mut train_ds = scenario_dataset(&sc, 50, gen_train).unwrap();
    let mut test_ds = scenario_dataset(&sc, 50, gen_test).unwrap();
    segment_dataset(&mut train_ds, 0.01).unwrap();
    segment_dataset(&mut test_ds, 0.01).unwrap();
    let labels: Vec<i32> = test_ds.labels_i32();

    // Input-space baseline: mean-pooled scaled positions.
    let pooled: Vec<Scalar> = (0..test_ds.len())
        .flat_map(|i| {
            let t = test_ds.lengths[i] as usize;
            let mut m = [0.0; 3];
            for s in 0..t {
                let st = test_ds.state(i, s);
                for d in 0..3 {
                    m[d] += st[d] / t as Scalar;
                }
            }
            m
        })
        .collect();
    let x_in = InstanceRepr::new(test_ds.len(), 3, pooled).unwrap();
    diagnose("input space (pooled positions)", &x_in, &labels, 0);

    let cfg = TrainConfig {
        seed: train_seed,
        selector,
        ..TrainConfig::default()
    };
    let report = train(&train_ds, EncoderConfig::desk(selector.cols()), &cfg).unwrap();
    let seqs = encode_dataset(&test_ds, selector, &report.params).unwrap();
    let x_z = extract_instance_repr(&seqs).unwrap();
    diagnose("representation space (final-step z)", &x_z, &labels, 0);
}
