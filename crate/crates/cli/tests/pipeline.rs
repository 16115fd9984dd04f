//! End-to-end runs of the compiled binary: the full pipeline from synthetic
//! data to metrics, plus the failure modes a user hits first (degenerate
//! tolerance, missing checkpoint). Everything runs on deliberately tiny
//! datasets and epoch counts — these tests exercise plumbing, not learning.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use anyhow::Result;
use tempfile::TempDir;

fn trajrep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajrep"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn ok(args: &[&str]) -> String {
    let out = trajrep(args);
    assert!(
        out.status.success(),
        "`trajrep {}` failed:\n{}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> String {
    path.to_str().unwrap().to_owned()
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
        .lines()
        .map(str::to_owned)
        .collect()
}

#[test]
fn full_pipeline_from_synth_to_metrics() -> Result<()> {
    let dir = TempDir::new()?;
    let (raw_tr, raw_te) = (p(&dir, "tr.atds"), p(&dir, "te.atds"));
    let (seg_tr, seg_te) = (p(&dir, "tr_seg.atds"), p(&dir, "te_seg.atds"));
    let ck = p(&dir, "enc.atck");
    let reprs = p(&dir, "te.atrp");
    let metrics = p(&dir, "metrics.csv");
    let sweep = p(&dir, "sweep.csv");
    let proj = p(&dir, "proj.csv");

    ok(&["synth", "--per-class", "6", "--seed", "7", "--out", &s(&raw_tr)]);
    ok(&["synth", "--per-class", "6", "--seed", "8", "--out", &s(&raw_te)]);
    ok(&["segment", "--input", &s(&raw_tr), "--epsilon", "0.01", "--out", &s(&seg_tr)]);
    ok(&["segment", "--input", &s(&raw_te), "--epsilon", "0.01", "--out", &s(&seg_te)]);
    ok(&[
        "train", "--input", &s(&seg_tr), "--epochs", "2", "--batch-size", "8",
        "--out", &s(&ck),
    ]);
    ok(&["encode", "--input", &s(&seg_te), "--checkpoint", &s(&ck), "--out", &s(&reprs)]);
    let stdout = ok(&[
        "evaluate", "--train", &s(&seg_tr), "--test", &s(&seg_te),
        "--checkpoint", &s(&ck), "--out", &s(&metrics),
    ]);
    assert!(stdout.contains("acc"), "evaluate should print scores: {stdout}");
    ok(&[
        "sweep", "--input", &s(&reprs), "--k-min", "4", "--k-max", "8", "--step", "2",
        "--out", &s(&sweep),
    ]);
    ok(&["project", "--input", &s(&reprs), "--out", &s(&proj)]);

    let m = lines(&metrics);
    assert_eq!(m.len(), 2, "metrics CSV should be a header and one row: {m:?}");
    assert!(m[0].starts_with("dataset,"), "header row first: {}", m[0]);

    let sw = lines(&sweep);
    assert_eq!(sw.len(), 4, "header plus k = 4, 6, 8: {sw:?}");
    assert!(sw[1].starts_with("4,"), "first sweep row at k = 4: {}", sw[1]);

    let pr = lines(&proj);
    assert_eq!(pr.len(), 25, "header plus one row per test flight: {}", pr.len());

    // Training writes a loss curve next to the checkpoint; every artifact
    // gets a manifest describing how it was produced.
    assert!(p(&dir, "enc.atck.loss.csv").exists(), "loss curve missing");
    for artifact in ["tr.atds", "tr_seg.atds", "enc.atck", "te.atrp", "metrics.csv"] {
        let manifest = p(&dir, &format!("{artifact}.manifest.toml"));
        assert!(manifest.exists(), "missing {}", manifest.display());
    }
    Ok(())
}

#[test]
fn reruns_produce_byte_identical_artifacts() -> Result<()> {
    let dir = TempDir::new()?;
    let (a, b) = (p(&dir, "a.atds"), p(&dir, "b.atds"));
    ok(&["synth", "--per-class", "5", "--seed", "3", "--out", &s(&a)]);
    ok(&["synth", "--per-class", "5", "--seed", "3", "--out", &s(&b)]);
    assert_eq!(fs::read(&a)?, fs::read(&b)?, "same seed, same dataset bytes");

    let (ck_a, ck_b) = (p(&dir, "a.atck"), p(&dir, "b.atck"));
    for ck in [&ck_a, &ck_b] {
        ok(&[
            "train", "--input", &s(&a), "--epsilon", "0.01", "--epochs", "2",
            "--batch-size", "8", "--out", &s(ck),
        ]);
    }
    assert_eq!(fs::read(&ck_a)?, fs::read(&ck_b)?, "training must be deterministic");
    Ok(())
}

#[test]
fn degenerate_epsilon_warns_but_succeeds() -> Result<()> {
    let dir = TempDir::new()?;
    let raw = p(&dir, "raw.atds");
    let seg = p(&dir, "seg.atds");
    ok(&["synth", "--per-class", "3", "--seed", "1", "--out", &s(&raw)]);
    let out = trajrep(&["segment", "--input", &s(&raw), "--epsilon", "10", "--out", &s(&seg)]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("degenerate"),
        "a tolerance that flattens every flight should warn: {stderr}"
    );
    Ok(())
}

#[test]
fn evaluate_refuses_to_run_without_a_checkpoint() -> Result<()> {
    let dir = TempDir::new()?;
    let raw = p(&dir, "raw.atds");
    ok(&["synth", "--per-class", "3", "--seed", "1", "--out", &s(&raw)]);
    let out = trajrep(&[
        "evaluate", "--train", &s(&raw), "--test", &s(&raw),
        "--out", &s(&p(&dir, "m.csv")),
    ]);
    assert!(!out.status.success(), "missing checkpoint must be an error");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("checkpoint required"), "unexpected error: {stderr}");
    Ok(())
}

#[test]
fn gridsearch_reports_every_cell_including_failures() -> Result<()> {
    let dir = TempDir::new()?;
    let raw = p(&dir, "raw.atds");
    let table = p(&dir, "grid.csv");
    ok(&["synth", "--per-class", "4", "--seed", "5", "--out", &s(&raw)]);
    // A tolerance of 10 in scaled units flattens every flight to a single
    // segment, so those cells cannot train and must be reported as failed.
    let stdout = ok(&[
        "gridsearch", "--input", &s(&raw), "--epsilon", "0.01,10", "--tau", "0.1,0.5",
        "--epochs", "1", "--batch-size", "8", "--out", &s(&table),
    ]);
    assert!(stdout.contains("best cell"), "should report the winner: {stdout}");
    let rows = lines(&table);
    assert_eq!(rows.len(), 5, "header plus four cells: {rows:?}");
    assert_eq!(rows[0], "epsilon,tau,acc,nmi,status");
    for row in &rows[1..] {
        if row.starts_with("10,") {
            assert!(row.contains("failed"), "flattened cell should fail: {row}");
        } else {
            assert!(row.ends_with(",ok"), "trainable cell should succeed: {row}");
        }
    }
    Ok(())
}
