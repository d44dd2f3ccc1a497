use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use ferkit::cli::run;
use ferkit::data::{generate_synthetic, write_manifest, ManifestEntry};

fn ferkit(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["ferkit"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Synthetic manifest restricted to `n` entries.
fn manifest(dir: &Path, n: usize, per_class: usize) -> (PathBuf, Vec<ManifestEntry>) {
    let mut entries = generate_synthetic(&dir.join("raw"), per_class, 31).unwrap();
    entries.truncate(n);
    let path = dir.join("raw").join("subset.jsonl");
    write_manifest(&path, &entries).unwrap();
    (path, entries)
}

fn preprocess_small(dir: &Path, n: usize) -> PathBuf {
    let (m, _) = manifest(dir, n, 2);
    let out = dir.join("corpus");
    let (code, _, err) = ferkit(&["preprocess", "--manifest", s(&m), "--out", s(&out), "--width", "48", "--height", "60"]);
    assert_eq!(code, 0, "{err}");
    out
}

#[test]
fn preprocess_writes_five_per_entry() {
    let dir = tempfile::tempdir().unwrap();
    let (m, _) = manifest(dir.path(), 4, 1);
    let out = dir.path().join("corpus");
    let (code, stdout, _) = ferkit(&["preprocess", "--manifest", s(&m), "--out", s(&out)]);
    assert_eq!(code, 0);
    assert!(stdout.contains("20 images"));
    assert_eq!(fs::read_dir(out.join("faces")).unwrap().count(), 20);
    assert_eq!(fs::read_to_string(out.join("corpus.jsonl")).unwrap().lines().count(), 20);
    assert_eq!(fs::read_to_string(out.join("skipped.txt")).unwrap(), "");
    let img = ferkit::imgproc::load_pgm(&out.join("faces/00000_1.pgm")).unwrap();
    assert_eq!(img.dims(), (80, 100));
}

#[test]
fn preprocess_reports_skips_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let (_, mut entries) = manifest(dir.path(), 4, 1);
    entries[2].landmarks = None;
    let m = dir.path().join("raw").join("gated.jsonl");
    write_manifest(&m, &entries).unwrap();
    let out = dir.path().join("corpus");
    let (code, _, err) = ferkit(&["preprocess", "--manifest", s(&m), "--out", s(&out)]);
    assert_eq!(code, 2);
    assert!(err.contains("face not detected"));
    let log = fs::read_to_string(out.join("skipped.txt")).unwrap();
    assert_eq!(log.lines().count(), 1);
    assert!(log.starts_with("3 "));
    assert_eq!(fs::read_to_string(out.join("corpus.jsonl")).unwrap().lines().count(), 15);
}

#[test]
fn preprocess_missing_manifest_fails() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = ferkit(&["preprocess", "--manifest", s(&dir.path().join("nope.jsonl")), "--out", s(dir.path())]);
    assert_eq!(code, 1);
    assert!(err.contains("nope.jsonl"));
}

#[test]
fn train_zero_epochs_then_evaluate_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    // 6 faces: Neutral (label 6) is absent
    let corpus = preprocess_small(dir.path(), 6);
    let weights = dir.path().join("model.ferw");
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# smoke run\nepochs = 0\nseed = 5\n").unwrap();
    let (code, _, err) = ferkit(&["train", "--config", s(&cfg), "--data", s(&corpus), "--weights", s(&weights)]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(fs::read_to_string(dir.path().join("model_history.csv")).unwrap(), "epoch,loss,accuracy\n");
    let state = ferkit::model::load_weights(&weights).unwrap();
    assert_eq!((state.seed, state.epochs_completed), (5, 0));

    let report = dir.path().join("eval").join("report.json");
    let (code, stdout, err) = ferkit(&["evaluate", "--weights", s(&weights), "--data", s(&corpus), "--report", s(&report)]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("Happy"));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["samples"], 30);
    assert_eq!(doc["classes"].as_array().unwrap().len(), 7);
    for key in ["precision", "recall", "f1", "support"] {
        assert!(doc["macro_avg"][key].is_number() && doc["weighted_avg"][key].is_number());
    }
    let cm: Vec<Vec<u64>> = serde_json::from_value(doc["confusion"].clone()).unwrap();
    let correct: u64 = (0..7).map(|i| cm[i][i]).sum();
    let total: u64 = cm.iter().flatten().sum();
    assert_eq!(total, 30);
    assert!((doc["accuracy"].as_f64().unwrap() - correct as f64 / total as f64).abs() < 1e-12);
    let recall_identity: f64 = doc["classes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["recall"].as_f64().unwrap() * c["support"].as_f64().unwrap())
        .sum::<f64>()
        / total as f64;
    assert!((recall_identity - doc["accuracy"].as_f64().unwrap()).abs() < 1e-12);
    let roc = doc["roc"].as_array().unwrap();
    assert_eq!(roc[6]["status"], "undefined");
    for r in &roc[..6] {
        assert_eq!(r["status"], "ok");
        let csv = fs::read_to_string(report.with_file_name(r["file"].as_str().unwrap())).unwrap();
        assert!(csv.starts_with("class,fpr,tpr\n"));
    }

    let raw = dir.path().join("raw");
    let entry: serde_json::Value =
        serde_json::from_str(fs::read_to_string(raw.join("subset.jsonl")).unwrap().lines().next().unwrap()).unwrap();
    let lm = dir.path().join("lm.json");
    fs::write(&lm, entry["landmarks"].to_string()).unwrap();
    let image = raw.join(entry["path"].as_str().unwrap());
    let annotate = dir.path().join("annot");
    let (code, stdout, err) = ferkit(&[
        "predict", "--weights", s(&weights), "--image", s(&image), "--landmarks", s(&lm), "--annotate", s(&annotate),
    ]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    let probs: Vec<f64> = lines[1].split(' ').map(|v| v.parse().unwrap()).collect();
    assert_eq!(probs.len(), 7);
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let best = ferkit::model::argmax(&probs);
    assert_eq!(lines[0], format!("label={}", ferkit::data::Emotion::ALL[best]));
    assert!(annotate.join("face.pgm").exists());
    assert!(fs::read_to_string(annotate.join("prediction.txt")).unwrap().starts_with(lines[0]));

    // the manifest line itself also works as a landmark file
    let whole = dir.path().join("entry.json");
    fs::write(&whole, entry.to_string()).unwrap();
    let (code, again, _) = ferkit(&["predict", "--weights", s(&weights), "--image", s(&image), "--landmarks", s(&whole)]);
    assert_eq!((code, again), (0, stdout));

    let empty = dir.path().join("none.json");
    fs::write(&empty, r#"{"path": "x.pgm", "label": 0, "landmarks": null}"#).unwrap();
    let (code, _, err) = ferkit(&["predict", "--weights", s(&weights), "--image", s(&image), "--landmarks", s(&empty)]);
    assert_eq!(code, 2);
    assert!(err.contains("face not detected"));
}

#[test]
fn train_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = preprocess_small(dir.path(), 2);
    let a = dir.path().join("a.ferw");
    let b = dir.path().join("b.ferw");
    for (w, threads) in [(&a, "1"), (&b, "2")] {
        let (code, _, err) = ferkit(&[
            "train", "--data", s(&corpus), "--weights", s(w), "--epochs", "2", "--batch-size", "4", "--seed", "9",
            "--lr", "0.003", "--threads", threads,
        ]);
        assert_eq!(code, 0, "{err}");
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let hist = fs::read_to_string(dir.path().join("a_history.csv")).unwrap();
    assert_eq!(hist, fs::read_to_string(dir.path().join("b_history.csv")).unwrap());
    assert_eq!(hist.lines().count(), 3);
    assert_eq!(ferkit::model::load_weights(&a).unwrap().epochs_completed, 2);
}

#[test]
fn bad_config_and_usage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "epochs = 3\nlearning = 0.1\n").unwrap();
    let (code, _, err) = ferkit(&["train", "--config", s(&cfg), "--data", s(dir.path()), "--weights", "w"]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown key `learning`"));
    assert_eq!(ferkit(&["frobnicate"]).0, 1);
    assert_eq!(ferkit(&[]).0, 1);
    let (code, out, _) = ferkit(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("preprocess"));
    let (code, _, err) = ferkit(&["evaluate", "--weights", "missing.ferw", "--data", ".", "--report", "r.json"]);
    assert_eq!(code, 1);
    assert!(err.contains("missing.ferw"));
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_ferkit");
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(exe).arg("--version").status().unwrap();
    assert_eq!(status.code(), Some(0));
    let out = Command::new(exe)
        .args(["preprocess", "--manifest", s(&dir.path().join("x")), "--out", s(dir.path())])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ferkit:"));
    let out = Command::new(exe).arg("train").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
