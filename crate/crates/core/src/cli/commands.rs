use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use crate::data::{load_corpus, load_manifest, prepare_faces, write_corpus, Dataset, Emotion, SkipRecord};
use crate::geometry::{extract_face, LandmarkSet};
use crate::imgproc::{load_image, save_pgm};
use crate::metrics::{class_report, confusion, roc_curve, auc, NUM_CLASSES};
use crate::model::{
    argmax, build_paper_network_for, load_weights, predict_averaged, predict_tensor, save_weights, train as train_model,
    NetworkState,
};

use super::config::{RunConfig, THREADS_ENV};
use super::{TrainArgs, EXIT_FAILURE, EXIT_OK, EXIT_PARTIAL};

#[derive(Debug)]
pub(super) struct CliError {
    message: String,
    code: i32,
}

impl CliError {
    fn fail(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: EXIT_FAILURE,
        }
    }

    fn partial(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: EXIT_PARTIAL,
        }
    }

    pub(super) fn exit_code(&self) -> i32 {
        self.code
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

type CmdResult = Result<i32, CliError>;

fn fail<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::fail(format!("{context}: {e}"))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::fail(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::fail(format!("{}: {e}", path.display())))
}

fn out_line(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    writeln!(out, "{text}").map_err(fail("writing output"))
}

pub(super) fn preprocess(
    manifest: &Path,
    out_dir: &Path,
    width: usize,
    height: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    if width == 0 || height == 0 {
        return Err(CliError::fail("output width and height must be positive"));
    }
    let m = load_manifest(manifest).map_err(fail("reading manifest"))?;
    let mut skips: Vec<SkipRecord> = m
        .errors
        .iter()
        .map(|e| SkipRecord {
            line: e.line,
            path: PathBuf::from("-"),
            reason: format!("bad manifest line: {}", e.message),
        })
        .collect();
    let faces = prepare_faces(&m.entries, width, height, &mut skips);
    skips.sort_by_key(|s| s.line);
    fs::create_dir_all(out_dir).map_err(fail("creating output directory"))?;
    let written = write_corpus(out_dir, &faces).map_err(fail("writing corpus"))?;
    let log: String = skips.iter().map(|s| format!("{s}\n")).collect();
    write_file(&out_dir.join("skipped.txt"), log.as_bytes())?;
    for s in &skips {
        let _ = writeln!(err, "skipped {s}");
    }
    out_line(
        out,
        &format!(
            "{} entries usable, {} skipped, {written} images written to {}",
            faces.len(),
            skips.len(),
            out_dir.display()
        ),
    )?;
    Ok(if skips.is_empty() { EXIT_OK } else { EXIT_PARTIAL })
}

fn default_history_path(weights: &Path) -> PathBuf {
    let stem = weights.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "weights".into());
    weights.with_file_name(format!("{stem}_history.csv"))
}

pub(super) fn train(args: TrainArgs, out: &mut dyn Write) -> CmdResult {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| CliError::fail(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text).map_err(|e| CliError::fail(format!("{}: {e}", path.display())))?;
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = args.lr {
        cfg.learning_rate = v;
    }
    if let Some(v) = args.momentum {
        cfg.momentum = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.shuffle {
        cfg.shuffle = v;
    }
    if let Some(v) = args.threads {
        cfg.threads = Some(v);
    }
    if let Some(v) = args.history {
        cfg.history = Some(v);
    }
    let env = std::env::var(THREADS_ENV).ok();
    let threads = cfg.resolve_threads(env.as_deref()).map_err(fail("configuration"))?;
    let tcfg = cfg.train_config(threads).map_err(fail("configuration"))?;

    let data = load_corpus(&args.data).map_err(fail("loading corpus"))?;
    let spec = build_paper_network_for(data.shape);
    let mut state = NetworkState::init(spec, cfg.seed).map_err(fail("building network"))?;
    let history = train_model(&mut state, &data, &tcfg).map_err(fail("training"))?;

    save_weights(&state, &args.weights).map_err(fail("saving weights"))?;
    let mut csv = String::from("epoch,loss,accuracy\n");
    for h in &history {
        let _ = writeln!(csv, "{},{},{}", h.epoch, h.loss, h.accuracy);
    }
    let history_path = cfg.history.clone().unwrap_or_else(|| default_history_path(&args.weights));
    write_file(&history_path, csv.as_bytes())?;
    let summary = match history.last() {
        Some(h) => format!(
            "trained {} epochs on {} samples: loss {:.4}, accuracy {:.4}",
            history.len(),
            data.len(),
            h.loss,
            h.accuracy
        ),
        None => format!("0 epochs requested; wrote initial weights for {} samples", data.len()),
    };
    out_line(out, &summary)?;
    Ok(EXIT_OK)
}

/// Eval-mode probabilities for every row, in corpus order.
fn score(state: &NetworkState, data: &Dataset) -> Result<Vec<Vec<f64>>, CliError> {
    if data.shape != state.net.input {
        return Err(CliError::fail(format!(
            "corpus images are {} but the network expects {}",
            data.shape, state.net.input
        )));
    }
    data.samples
        .par_iter()
        .map(|s| predict_tensor(state, &s.input))
        .collect::<Result<Vec<_>, _>>()
        .map_err(fail("scoring"))
}

pub(super) fn evaluate(weights: &Path, data: &Path, report: &Path, out: &mut dyn Write) -> CmdResult {
    let state = load_weights(weights).map_err(|e| CliError::fail(format!("{}: {e}", weights.display())))?;
    let data = load_corpus(data).map_err(fail("loading corpus"))?;
    let probs = score(&state, &data)?;
    let truths = data.labels();
    let preds: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
    let cm = confusion(&preds, &truths).map_err(fail("metrics"))?;
    let rep = class_report(&cm);
    let names = Emotion::names();

    let stem = report.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    let mut roc = Vec::with_capacity(NUM_CLASSES);
    for (c, name) in names.iter().enumerate() {
        let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
        match roc_curve(&scores, &truths, c) {
            Ok(curve) => {
                let file = format!("{stem}_roc_{}.csv", name.to_lowercase());
                write_file(&report.with_file_name(&file), curve.to_csv().as_bytes())?;
                roc.push(json!({"class": c, "name": name, "status": "ok", "auc": auc(&curve), "file": file}));
            }
            Err(e) => roc.push(json!({"class": c, "name": name, "status": "undefined", "reason": e.to_string()})),
        }
    }
    let classes: Vec<_> = rep
        .classes
        .iter()
        .enumerate()
        .map(|(c, s)| {
            json!({
                "class": c,
                "name": names[c],
                "precision": s.precision,
                "recall": s.recall,
                "f1": s.f1,
                "support": s.support,
                "zero_division": s.zero_division,
            })
        })
        .collect();
    let doc = json!({
        "samples": data.len(),
        "accuracy": rep.accuracy,
        "classes": classes,
        "macro_avg": rep.macro_avg,
        "weighted_avg": rep.weighted_avg,
        "confusion": cm.counts,
        "roc": roc,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    write_file(report, text.as_bytes())?;
    out_line(out, rep.to_table(&names).trim_end())?;
    Ok(EXIT_OK)
}

/// Landmarks from a bare pair list or an object with a `landmarks` field.
/// `Ok(None)` means the file says no face was found.
fn read_landmarks(path: &Path) -> Result<Option<LandmarkSet>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::fail(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::fail(format!("{}: {e}", path.display())))?;
    let pairs = match value {
        serde_json::Value::Object(mut map) => map.remove("landmarks").unwrap_or(serde_json::Value::Null),
        other => other,
    };
    if pairs.is_null() || pairs.as_array().is_some_and(|a| a.is_empty()) {
        return Ok(None);
    }
    let pairs: Vec<[f64; 2]> =
        serde_json::from_value(pairs).map_err(|e| CliError::fail(format!("{}: {e}", path.display())))?;
    LandmarkSet::from_pairs(&pairs)
        .map(Some)
        .map_err(|e| CliError::fail(format!("{}: {e}", path.display())))
}

pub(super) fn predict(
    weights: &Path,
    image: &Path,
    landmarks: &Path,
    annotate: Option<&Path>,
    out: &mut dyn Write,
) -> CmdResult {
    let state = load_weights(weights).map_err(|e| CliError::fail(format!("{}: {e}", weights.display())))?;
    let img = load_image(image).map_err(|e| CliError::fail(format!("{}: {e}", image.display())))?;
    let lm = read_landmarks(landmarks)?.ok_or_else(|| CliError::partial("face not detected: no landmarks"))?;
    let face = extract_face(&img, &lm).map_err(|e| CliError::partial(format!("face not detected: {e}")))?;
    let (label, probs) = predict_averaged(&state, &face).map_err(fail("prediction"))?;
    let name = Emotion::ALL[label].name();
    let line = probs.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
    out_line(out, &format!("label={name}"))?;
    out_line(out, &line)?;
    if let Some(dir) = annotate {
        fs::create_dir_all(dir).map_err(|e| CliError::fail(format!("{}: {e}", dir.display())))?;
        save_pgm(&face, &dir.join("face.pgm")).map_err(fail("writing face"))?;
        let mut text = format!("label={name}\n");
        for (e, p) in Emotion::ALL.iter().zip(&probs) {
            let _ = writeln!(text, "{}={p}", e.name());
        }
        write_file(&dir.join("prediction.txt"), text.as_bytes())?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_path_sits_beside_weights() {
        assert_eq!(default_history_path(Path::new("out/model.ferw")), PathBuf::from("out/model_history.csv"));
    }

    #[test]
    fn landmark_formats() {
        let dir = tempfile::tempdir().unwrap();
        let pairs: Vec<[f64; 2]> = (0..68).map(|i| [i as f64, (i * 2) as f64]).collect();
        let bare = dir.path().join("a.json");
        fs::write(&bare, serde_json::to_string(&pairs).unwrap()).unwrap();
        assert!(read_landmarks(&bare).unwrap().is_some());
        let obj = dir.path().join("b.json");
        fs::write(&obj, json!({"path": "x.pgm", "label": 1, "landmarks": pairs}).to_string()).unwrap();
        assert_eq!(read_landmarks(&obj).unwrap(), read_landmarks(&bare).unwrap());
        let none = dir.path().join("c.json");
        fs::write(&none, r#"{"path": "x.pgm", "label": 1}"#).unwrap();
        assert!(read_landmarks(&none).unwrap().is_none());
        let short = dir.path().join("d.json");
        fs::write(&short, "[[1, 2]]").unwrap();
        assert_eq!(read_landmarks(&short).unwrap_err().exit_code(), EXIT_FAILURE);
    }
}
