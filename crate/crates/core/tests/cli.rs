//! End-to-end runs of the `aset` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use aset::active_set::RunTrace;
use aset::io::{read_cube, read_f32_raster, read_label_raster, read_labels};
use aset::model::Classifier;

fn aset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aset"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = aset(args);
    assert!(
        out.status.success(),
        "aset {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec![
        "synth", "--out", p(dir), "--height", "64", "--width", "64", "--classes", "3", "--bands", "6",
    ];
    args.extend_from_slice(extra);
    ok(&args);
}

/// Trains with small defaults; `extra` may override `--iters`.
fn train(scene: &Path, out: &Path, extra: &[&str]) -> String {
    let cube = scene.join("cube.json");
    let labels = scene.join("labels.txt");
    let mut args = vec![
        "train", "--cube", p(&cube), "--labels", p(&labels), "--out", p(out), "--per-class", "30",
        "--bands-per-minibatch", "6",
    ];
    if !extra.contains(&"--iters") {
        args.extend(["--iters", "8"]);
    }
    args.extend_from_slice(extra);
    ok(&args)
}

fn trace(dir: &Path) -> RunTrace {
    RunTrace::read_tsv(fs::File::open(dir.join("trace.tsv")).unwrap()).unwrap()
}

#[test]
fn synth_is_reproducible_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth(&a, &["--seed", "7"]);
    synth(&b, &["--seed", "7"]);
    for name in ["cube.json", "cube.raw", "labels.txt"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let cube = read_cube(a.join("cube.json")).unwrap();
    assert_eq!((cube.height(), cube.width(), cube.band_count()), (64, 64, 6));
    assert_eq!(read_labels(a.join("labels.txt"), None).unwrap().len(), 64 * 64);
}

#[test]
fn full_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    let run = tmp.path().join("run");
    synth(&scene, &["--height-band"]);
    let stdout = train(&scene, &run, &[]);
    assert!(stdout.contains("final kappa: "), "{stdout}");
    assert!(stdout.contains("active features: "), "{stdout}");
    let t = trace(&run);
    assert_eq!(t.len(), 9);

    let classes = run.join("classes");
    ok(&["classify", "--model", p(&run.join("model.txt")), "--cube", p(&scene.join("cube.json")), "--out", p(&classes)]);
    let labels = read_label_raster(classes.join("labels.raw")).unwrap();
    assert_eq!(labels.len(), 64 * 64);
    let proba: Vec<Vec<f32>> = (1..=3)
        .map(|c| read_f32_raster(classes.join(format!("proba_{c}.raw"))).unwrap())
        .collect();
    for i in 0..labels.len() {
        let s: f64 = proba.iter().map(|p| f64::from(p[i])).sum();
        assert!((s - 1.0).abs() <= 1e-6, "pixel {i}: probabilities sum to {s}");
        assert!(labels[i] < 3);
    }

    // the written map agrees with predictions made in-process
    let model = Classifier::load(run.join("model.txt")).unwrap();
    let cube = read_cube(scene.join("cube.json")).unwrap();
    let samples = read_labels(scene.join("labels.txt"), None).unwrap();
    let predicted = model.predict_samples(&cube, &samples).unwrap();
    for (&(r, c), y) in samples.pixels().iter().zip(predicted) {
        assert_eq!(labels[r * 64 + c], y);
    }

    let rep = run.join("report");
    let printed = ok(&[
        "report", "--model", p(&run.join("model.txt")), "--trace", p(&run.join("trace.tsv")), "--out", p(&rep),
    ]);
    let text = fs::read_to_string(rep.join("report.txt")).unwrap();
    assert_eq!(printed, text);
    let hist: usize = text
        .split("# depth_histogram\n")
        .nth(1)
        .unwrap()
        .lines()
        .skip(1)
        .take_while(|l| !l.is_empty())
        .map(|l| l.split('\t').nth(1).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(hist, model.state.features());
}

#[test]
fn zero_iterations_gives_one_trace_row() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    synth(&scene, &[]);
    train(&scene, &tmp.path().join("run"), &["--iters", "0"]);
    let t = trace(&tmp.path().join("run"));
    assert_eq!(t.len(), 1);
    assert_eq!(t.records[0].iteration, 0);
}

#[test]
fn flat_hierarchy_matches_shallow() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    synth(&scene, &["--hierarchical"]);
    train(&scene, &tmp.path().join("s"), &["--mode", "shallow"]);
    train(
        &scene,
        &tmp.path().join("h"),
        &["--mode", "hier", "--gamma0", "1.0", "--band-inputs-only"],
    );
    assert_eq!(trace(&tmp.path().join("s")), trace(&tmp.path().join("h")));
    assert_eq!(
        fs::read(tmp.path().join("s/model.txt")).unwrap(),
        fs::read(tmp.path().join("h/model.txt")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");

    assert_eq!(aset(&["synth"]).status.code(), Some(2), "missing --out");
    assert_eq!(aset(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(aset(&["--help"]).status.code(), Some(0));

    let out = aset(&["classify", "--model", p(&missing), "--cube", p(&missing), "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.json"));

    // more confuser pairs than classes allow
    let out = aset(&["synth", "--out", p(tmp.path()), "--classes", "2", "--confusers", "2"]);
    assert_eq!(out.status.code(), Some(4));

    let scene = tmp.path().join("scene");
    synth(&scene, &[]);
    fs::write(scene.join("cube.raw"), [0u8; 12]).unwrap();
    let out = aset(&[
        "train", "--cube", p(&scene.join("cube.json")), "--labels", p(&scene.join("labels.txt")), "--out", p(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(3), "truncated cube");

    let bad = tmp.path().join("bad.txt");
    fs::write(&bad, "{\"format\": \"something-else\"}").unwrap();
    let out = aset(&["classify", "--model", p(&bad), "--cube", p(&missing), "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(3), "malformed model");

    let out = aset(&["synth", "--out", p(tmp.path()), "--bands", "0"]);
    assert_ne!(out.status.code(), Some(0));
}
