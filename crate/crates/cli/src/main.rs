//! `trajrep` — the trajectory-representation pipeline as one binary.
//!
//! Subcommands mirror the pipeline stages: `preprocess` raw CSV into the
//! dataset container, `synth` a labeled dataset from a scenario,
//! `segment` with the split-and-merge simplifier, `train` the contrastive
//! encoder, `encode` datasets into representation files, then `evaluate`,
//! `sweep`, `gridsearch`, and `project` for the downstream protocols.
//! Every artifact-producing command drops a `.manifest.toml` beside its
//! primary output; re-running a command with the same inputs reproduces
//! its artifacts byte for byte.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use manifest::ManifestBuilder;
use trajrep::encoder::{encode_dataset, EncoderConfig, EncoderParams};
use trajrep::eval::{evaluate, extract_instance_repr, mi_sweep, pca::pca_project};
use trajrep::features::FeatureSelector;
use trajrep::io::{
    load_checkpoint, load_dataset, load_reprs, read_records, save_checkpoint, save_dataset,
    save_reprs, write_loss_curve_csv, write_metrics_csv, write_projection_csv, write_sweep_csv,
    MetricsRow, PreprocessConfig, ReprFile,
};
use trajrep::loss::LossVariant;
use trajrep::preprocess::preprocess_records;
use trajrep::rdp::segment_dataset;
use trajrep::synth::{scenario_dataset, Scenario};
use trajrep::train::{grid_search, train, TrainConfig};
use trajrep::Scalar;

#[derive(Parser)]
#[command(name = "trajrep", version, about = "Trajectory representation learning pipeline")]
struct Cli {
    /// Worker threads for data-parallel stages (0 keeps the default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert raw surveillance CSV into a dataset container.
    Preprocess(PreprocessArgs),
    /// Generate a labeled synthetic dataset from a scenario.
    Synth(SynthArgs),
    /// Assign segment ids with the trajectory simplifier.
    Segment(SegmentArgs),
    /// Train the contrastive encoder on a segmented dataset.
    Train(TrainArgs),
    /// Encode a dataset into per-timestep representations.
    Encode(EncodeArgs),
    /// Classify and cluster instance representations against labels.
    Evaluate(EvaluateArgs),
    /// Mutual information of k-means clusterings across k.
    Sweep(SweepArgs),
    /// Train across an (epsilon, tau) grid and rank the cells.
    Gridsearch(GridsearchArgs),
    /// Project instance representations onto two principal components.
    Project(ProjectArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    let outcome = match cli.command {
        Command::Preprocess(a) => run_preprocess(a),
        Command::Synth(a) => run_synth(a),
        Command::Segment(a) => run_segment(a),
        Command::Train(a) => run_train(a),
        Command::Encode(a) => run_encode(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Gridsearch(a) => run_gridsearch(a),
        Command::Project(a) => run_project(a),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

/// Parses `--features all|positions`.
fn parse_selector(s: &str) -> Result<FeatureSelector, String> {
    match s {
        "all" => Ok(FeatureSelector::ALL),
        "positions" => Ok(FeatureSelector::POSITION_ONLY),
        other => Err(format!("unknown feature set `{other}` (all|positions)")),
    }
}

/// Parses `--preset desk|full`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Preset {
    Desk,
    Full,
}

impl Preset {
    fn config(self, input_dim: usize) -> EncoderConfig {
        match self {
            Preset::Desk => EncoderConfig::desk(input_dim),
            Preset::Full => EncoderConfig::full(input_dim),
        }
    }
}

fn load_labeled_reprs(path: &Path) -> Result<(ReprFile, Vec<i32>)> {
    let rf = load_reprs(path).with_context(|| format!("reading {}", path.display()))?;
    if rf.labels.iter().any(|&l| l < 0) {
        bail!(
            "{} holds unlabeled instances; this protocol needs labels",
            path.display()
        );
    }
    let labels = rf.labels.clone();
    Ok((rf, labels))
}

fn meta_number(meta: &[(String, String)], key: &str) -> Option<Scalar> {
    meta.iter()
        .find(|(k, _)| k == key)
        .and_then(|(_, v)| v.parse().ok())
}

/// Feature selector implied by a checkpoint's input width.
fn selector_for(params: &EncoderParams<Scalar>) -> Result<FeatureSelector> {
    for sel in [FeatureSelector::ALL, FeatureSelector::POSITION_ONLY] {
        if sel.cols() == params.config.input_dim {
            return Ok(sel);
        }
    }
    bail!(
        "checkpoint expects {} input features, no known feature set matches",
        params.config.input_dim
    )
}

// --- preprocess -----------------------------------------------------------

#[derive(Args)]
struct PreprocessArgs {
    /// Raw records CSV (flight_id,timestamp_s,lat_deg,lon_deg,baro_alt_m).
    #[arg(long)]
    input: PathBuf,
    /// TOML config fixing the frame and pipeline knobs.
    #[arg(long)]
    config: PathBuf,
    /// Output dataset container.
    #[arg(long)]
    out: PathBuf,
}

fn run_preprocess(a: PreprocessArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    let text = fs::read_to_string(&a.config)
        .with_context(|| format!("reading {}", a.config.display()))?;
    let cfg = PreprocessConfig::parse(&text)?;
    let file =
        fs::File::open(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let records = read_records(file)?;
    let n_records = records.len();
    let (mut ds, drops) = preprocess_records(records, &cfg.to_options()?)?;
    for d in &drops {
        log::warn!("dropped flight {} at {}: {}", d.id, d.stage, d.reason);
    }
    ds.push_meta("source", a.input.display().to_string());
    save_dataset(&a.out, &ds)?;
    log::info!(
        "{} records -> {} flights ({} dropped)",
        n_records,
        ds.len(),
        drops.len()
    );
    m.input(&a.input).input(&a.config).output(&a.out);
    m.set("config", cfg.to_text()).set("dropped", drops.len());
    m.write(&a.out)
}

// --- synth ----------------------------------------------------------------

#[derive(Args)]
struct SynthArgs {
    /// Scenario file; the built-in four-class scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Flights generated per procedure.
    #[arg(long, default_value_t = 50)]
    per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset container.
    #[arg(long)]
    out: PathBuf,
}

fn run_synth(a: SynthArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    let sc = match &a.scenario {
        Some(path) => {
            m.input(path);
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Scenario::parse(&text)?
        }
        None => Scenario::default(),
    };
    let ds = scenario_dataset(&sc, a.per_class, a.seed)?;
    save_dataset(&a.out, &ds)?;
    log::info!(
        "generated {} flights over {} procedures (t_max {})",
        ds.len(),
        sc.specs.len(),
        ds.t_max
    );
    m.seed(a.seed).output(&a.out);
    m.set("per_class", a.per_class)
        .set("procedures", sc.specs.len())
        .set("scenario", sc.to_text());
    m.write(&a.out)
}

// --- segment ----------------------------------------------------------------

#[derive(Args)]
struct SegmentArgs {
    /// Input dataset container.
    #[arg(long)]
    input: PathBuf,
    /// Simplification tolerance in scaled coordinate units.
    #[arg(long)]
    epsilon: Scalar,
    /// Output dataset container with segment ids attached.
    #[arg(long)]
    out: PathBuf,
}

fn run_segment(a: SegmentArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    let mut ds = load_dataset(&a.input)?;
    let counts = segment_dataset(&mut ds, a.epsilon)?;
    if counts.iter().all(|&c| c == 1) {
        log::warn!(
            "epsilon {} is degenerate: every trajectory collapsed to a single segment",
            a.epsilon
        );
    }
    let mean = counts.iter().sum::<u32>() as f64 / counts.len() as f64;
    log::info!("segmented {} flights, mean {:.2} segments", ds.len(), mean);
    ds.push_meta("epsilon", a.epsilon.to_string());
    save_dataset(&a.out, &ds)?;
    m.input(&a.input).output(&a.out);
    m.set("epsilon", a.epsilon).set("mean_segments", mean);
    m.write(&a.out)
}

// --- train ----------------------------------------------------------------

#[derive(Args)]
struct TrainArgs {
    /// Input dataset container (segmented, or pass --epsilon).
    #[arg(long)]
    input: PathBuf,
    /// Re-segment with this tolerance before training.
    #[arg(long)]
    epsilon: Option<Scalar>,
    #[arg(long, default_value_t = 0.1)]
    tau: Scalar,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: Scalar,
    #[arg(long, default_value_t = 0.01)]
    weight_decay: Scalar,
    /// Epochs without improvement before stopping (0 disables).
    #[arg(long, default_value_t = 20)]
    patience: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "modified")]
    loss_variant: LossVariant,
    /// Feature columns fed to the encoder.
    #[arg(long, default_value = "all", value_parser = parse_selector)]
    features: FeatureSelector,
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    preset: Preset,
    /// Output checkpoint.
    #[arg(long)]
    out: PathBuf,
    /// Loss curve CSV (defaults to the checkpoint path + .loss.csv).
    #[arg(long)]
    loss_curve: Option<PathBuf>,
}

fn run_train(a: TrainArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    let mut ds = load_dataset(&a.input)?;
    if let Some(eps) = a.epsilon {
        segment_dataset(&mut ds, eps)?;
    } else if ds.segment_ids.is_none() {
        bail!(
            "{} has no segment ids; run `segment` first or pass --epsilon",
            a.input.display()
        );
    }
    let cfg = TrainConfig {
        batch_size: a.batch_size,
        lr: a.lr,
        weight_decay: a.weight_decay,
        tau: a.tau,
        epochs: a.epochs,
        patience: a.patience,
        seed: a.seed,
        variant: a.loss_variant,
        selector: a.features,
    };
    let enc = a.preset.config(a.features.cols());
    let report = train(&ds, enc, &cfg)?;
    log::info!(
        "trained {} epochs, mean loss {:.4} -> {:.4}{}",
        report.loss_curve.len(),
        report.loss_curve.first().unwrap(),
        report.loss_curve.last().unwrap(),
        if report.stopped_early {
            " (stopped early)"
        } else {
            ""
        }
    );
    save_checkpoint(&a.out, &report.params)?;
    let curve_path = a
        .loss_curve
        .unwrap_or_else(|| append_ext(&a.out, "loss.csv"));
    let mut w = fs::File::create(&curve_path)
        .with_context(|| format!("writing {}", curve_path.display()))?;
    write_loss_curve_csv(&mut w, &report.loss_curve)?;

    m.input(&a.input).output(&a.out).output(&curve_path);
    m.seed(a.seed);
    if let Some(eps) = a.epsilon {
        m.set("epsilon", eps);
    }
    m.set("tau", cfg.tau)
        .set("epochs", cfg.epochs)
        .set("epochs_run", report.loss_curve.len())
        .set("batch_size", cfg.batch_size)
        .set("lr", cfg.lr)
        .set("weight_decay", cfg.weight_decay)
        .set("patience", cfg.patience)
        .set("loss_variant", cfg.variant)
        .set("features", cfg.selector)
        .set("preset", format!("{:?}", a.preset).to_lowercase());
    m.write(&a.out)
}

/// `x.atck` -> `x.atck.loss.csv` style sibling paths.
fn append_ext(path: &Path, ext: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(ext);
    path.with_file_name(name)
}

// --- encode ----------------------------------------------------------------

#[derive(Args)]
struct EncodeArgs {
    /// Input dataset container.
    #[arg(long)]
    input: PathBuf,
    /// Trained encoder checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Output representation container.
    #[arg(long)]
    out: PathBuf,
}

fn run_encode(a: EncodeArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    let ds = load_dataset(&a.input)?;
    let params = load_checkpoint(&a.checkpoint)?;
    let selector = selector_for(&params)?;
    let seqs = encode_dataset(&ds, selector, &params)?;
    let mut rf = ReprFile::new(ds.ids.clone(), ds.labels_i32(), seqs)?;
    rf.meta = ds.meta.clone();
    rf.meta
        .push(("checkpoint".into(), a.checkpoint.display().to_string()));
    save_reprs(&a.out, &rf)?;
    log::info!(
        "encoded {} instances to width {} with `{}` features",
        rf.seqs.len(),
        rf.dim,
        selector
    );
    m.input(&a.input).input(&a.checkpoint).output(&a.out);
    m.set("features", selector).set("dim", rf.dim);
    m.write(&a.out)
}

// --- evaluate ----------------------------------------------------------------

#[derive(Args)]
struct EvaluateArgs {
    /// Training-split dataset container.
    #[arg(long)]
    train: PathBuf,
    /// Test-split dataset container.
    #[arg(long)]
    test: PathBuf,
    /// Trained encoder checkpoint (required).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// SVM box constraint.
    #[arg(long, default_value_t = 1.0)]
    c: Scalar,
    /// RBF bandwidth; a variance heuristic when omitted.
    #[arg(long)]
    gamma: Option<Scalar>,
    /// Seed for the clustering restarts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset name stamped into the metrics table.
    #[arg(long)]
    dataset: Option<String>,
    /// Epsilon stamped into the metrics table (dataset metadata wins).
    #[arg(long)]
    epsilon: Option<Scalar>,
    /// Tau stamped into the metrics table.
    #[arg(long)]
    tau: Option<Scalar>,
    /// Output metrics CSV.
    #[arg(long)]
    out: PathBuf,
}

fn run_evaluate(a: EvaluateArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    let Some(checkpoint) = &a.checkpoint else {
        bail!("checkpoint required");
    };
    let train_ds = load_dataset(&a.train)?;
    let test_ds = load_dataset(&a.test)?;
    if train_ds.labels.iter().any(|l| l.is_none())
        || test_ds.labels.iter().any(|l| l.is_none())
    {
        bail!("evaluation needs labels on every instance");
    }
    let params = load_checkpoint(checkpoint)?;
    let selector = selector_for(&params)?;
    let train_r = extract_instance_repr(&encode_dataset(&train_ds, selector, &params)?)?;
    let test_r = extract_instance_repr(&encode_dataset(&test_ds, selector, &params)?)?;
    let scores = evaluate(
        &train_r,
        &train_ds.labels_i32(),
        &test_r,
        &test_ds.labels_i32(),
        a.c,
        a.gamma,
        a.seed,
    )?;
    let row = MetricsRow {
        dataset: a.dataset.clone().unwrap_or_else(|| file_stem(&a.test)),
        epsilon: a
            .epsilon
            .or_else(|| meta_number(&test_ds.meta, "epsilon"))
            .unwrap_or(0.0),
        tau: a.tau.unwrap_or(0.0),
        seed: a.seed,
        acc: scores.acc,
        nmi: scores.nmi,
        ari: scores.ari,
    };
    let mut w =
        fs::File::create(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    write_metrics_csv(&mut w, &[row])?;
    println!(
        "acc {:.4}  nmi {:.4}  ari {:.4}",
        scores.acc, scores.nmi, scores.ari
    );
    m.input(&a.train).input(&a.test).input(checkpoint);
    m.output(&a.out).seed(a.seed);
    m.set("c", a.c)
        .set("gamma", a.gamma.map_or("variance-heuristic".into(), |g| g.to_string()))
        .set("features", selector);
    m.write(&a.out)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

// --- sweep ----------------------------------------------------------------

#[derive(Args)]
struct SweepArgs {
    /// Labeled representation container.
    #[arg(long)]
    input: PathBuf,
    /// Smallest k; the number of classes when omitted.
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long, default_value_t = 100)]
    k_max: usize,
    #[arg(long, default_value_t = 5)]
    step: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (k, mi).
    #[arg(long)]
    out: PathBuf,
}

fn run_sweep(a: SweepArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    let (rf, labels) = load_labeled_reprs(&a.input)?;
    let x = extract_instance_repr(&rf.seqs)?;
    let classes = {
        let mut c = labels.clone();
        c.sort_unstable();
        c.dedup();
        c.len()
    };
    let k_min = a.k_min.unwrap_or(classes);
    let rows = mi_sweep(&x, &labels, k_min, a.k_max, a.step, a.seed)?;
    let mut w =
        fs::File::create(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    write_sweep_csv(&mut w, &rows)?;
    log::info!("swept k = {k_min}..={} in steps of {}", a.k_max, a.step);
    m.input(&a.input).output(&a.out).seed(a.seed);
    m.set("k_min", k_min).set("k_max", a.k_max).set("step", a.step);
    m.write(&a.out)
}

// --- gridsearch ----------------------------------------------------------------

#[derive(Args)]
struct GridsearchArgs {
    /// Labeled dataset container (segment ids are recomputed per cell).
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated simplification tolerances.
    #[arg(long, value_delimiter = ',', required = true)]
    epsilon: Vec<Scalar>,
    /// Comma-separated temperatures.
    #[arg(long, value_delimiter = ',', required = true)]
    tau: Vec<Scalar>,
    /// Fraction of flights held out for validation scoring.
    #[arg(long, default_value_t = 0.25)]
    holdout: Scalar,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: Scalar,
    #[arg(long, default_value_t = 0.01)]
    weight_decay: Scalar,
    #[arg(long, default_value_t = 20)]
    patience: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "modified")]
    loss_variant: LossVariant,
    #[arg(long, default_value = "all", value_parser = parse_selector)]
    features: FeatureSelector,
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    preset: Preset,
    /// Output CSV of every grid cell.
    #[arg(long)]
    out: PathBuf,
}

fn run_gridsearch(a: GridsearchArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    let ds = load_dataset(&a.input)?;
    let base = TrainConfig {
        batch_size: a.batch_size,
        lr: a.lr,
        weight_decay: a.weight_decay,
        tau: 0.0, // replaced by each cell
        epochs: a.epochs,
        patience: a.patience,
        seed: a.seed,
        variant: a.loss_variant,
        selector: a.features,
    };
    let enc = a.preset.config(a.features.cols());
    let outcome = grid_search(&ds, enc, &base, &a.epsilon, &a.tau, a.holdout)?;

    let mut w =
        fs::File::create(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    use std::io::Write;
    writeln!(w, "epsilon,tau,acc,nmi,status")?;
    for cell in &outcome.cells {
        match (&cell.failure, cell.accuracy, cell.nmi) {
            (None, Some(acc), Some(nmi)) => {
                writeln!(w, "{},{},{acc},{nmi},ok", cell.epsilon, cell.tau)?
            }
            (Some(why), _, _) => writeln!(
                w,
                "{},{},,,failed: {}",
                cell.epsilon,
                cell.tau,
                why.replace(',', ";")
            )?,
            _ => unreachable!("a cell either scored or failed"),
        }
    }
    match outcome.best {
        Some((eps, tau)) => {
            println!("best cell: epsilon {eps} tau {tau}");
            m.set("best_epsilon", eps).set("best_tau", tau);
        }
        None => log::warn!("every grid cell failed"),
    }
    m.input(&a.input).output(&a.out).seed(a.seed);
    m.set("epsilon_grid", join(&a.epsilon))
        .set("tau_grid", join(&a.tau))
        .set("holdout_fraction", outcome.holdout_fraction)
        .set(
            "validation",
            "hash-based holdout carved from the training data",
        )
        .set("epochs", a.epochs);
    m.write(&a.out)
}

fn join(xs: &[Scalar]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

// --- project ----------------------------------------------------------------

#[derive(Args)]
struct ProjectArgs {
    /// Labeled representation container.
    #[arg(long)]
    input: PathBuf,
    /// Output CSV (id, label, pc1, pc2).
    #[arg(long)]
    out: PathBuf,
}

fn run_project(a: ProjectArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    let rf = load_reprs(&a.input)?;
    let x = extract_instance_repr(&rf.seqs)?;
    let proj = pca_project(&x)?;
    let rows: Vec<(String, i32, Scalar, Scalar)> = rf
        .ids
        .iter()
        .zip(&rf.labels)
        .enumerate()
        .map(|(i, (id, &label))| (id.clone(), label, proj.coords[2 * i], proj.coords[2 * i + 1]))
        .collect();
    let mut w =
        fs::File::create(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    write_projection_csv(&mut w, &rows)?;
    log::info!(
        "explained variance: {:.3} + {:.3}",
        proj.explained[0],
        proj.explained[1]
    );
    m.input(&a.input).output(&a.out);
    m.set("explained_pc1", proj.explained[0])
        .set("explained_pc2", proj.explained[1]);
    m.write(&a.out)
}
