use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lccf_core::datasets::{load_detection_corpus, synth_detection_corpus, write_manifest, DetectionSample, MotionSpec};
use lccf_core::detection::detect;
use lccf_core::evaluation::{read_curves, CurveKind};
use lccf_core::io::{read_ground_truth, save_image, save_sequence};
use lccf_core::linear_cf::FilterSpectrum;
use lccf_core::{BBox, ImagePlane};
use serde_json::Value;
use tempfile::TempDir;

fn lccf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lccf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = lccf(args);
    assert!(
        out.status.success(),
        "lccf {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn code(args: &[&str]) -> i32 {
    lccf(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_run_dir(dir: &Path, outputs: &[&str]) {
    for name in ["config.json", "summary.json"].iter().chain(outputs) {
        assert!(dir.join(name).is_file(), "{} missing {name}", dir.display());
    }
}

fn corpus(tmp: &TempDir, n: usize, w: usize, h: usize, seed: u64) -> PathBuf {
    let dir = tmp.path().join(format!("corpus_{n}_{w}x{h}_{seed}"));
    ok(&["synth", "detect", "--out", s(&dir), "--n", &n.to_string(), "--width", &w.to_string(),
        "--height", &h.to_string(), "--seed", &seed.to_string()]);
    dir.join("manifest.csv")
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(str::to_string).collect()
}

#[test]
fn train_mccf_writes_model_header() {
    let tmp = TempDir::new().unwrap();
    let manifest = corpus(&tmp, 4, 40, 32, 1);
    let out = tmp.path().join("train");
    ok(&["train", "--manifest", s(&manifest), "--solver", "mccf", "--out", s(&out)]);
    assert_run_dir(&out, &["model.lccf", "trace.csv"]);
    let bytes = fs::read(out.join("model.lccf")).unwrap();
    assert_eq!(&bytes[..4], b"LCCF");
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    assert_eq!((u32_at(6), u32_at(10), u32_at(14)), (1, 40, 32));
    let model = FilterSpectrum::load(&out.join("model.lccf")).unwrap();
    assert_eq!((model.num_channels(), model.width(), model.height()), (1, 40, 32));
}

#[test]
fn lc_lcf_trace_has_one_row_per_iteration() {
    let tmp = TempDir::new().unwrap();
    let manifest = corpus(&tmp, 10, 40, 32, 2);
    let out = tmp.path().join("train");
    ok(&["train", "--manifest", s(&manifest), "--solver", "lc-lcf", "--maxiter", "12", "--out", s(&out)]);
    let text = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("iteration,epsilon,sigma,subset_size"));
    let rows = data_rows(&out.join("trace.csv"));
    assert_eq!(rows.len(), 12);
    assert!(rows.last().unwrap().ends_with(",10"));
}

#[test]
fn training_is_byte_reproducible() {
    let tmp = TempDir::new().unwrap();
    let manifest = corpus(&tmp, 8, 40, 32, 3);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        ok(&["train", "--manifest", s(&manifest), "--solver", "lc-lcf", "--seed", "9", "--out", s(dir)]);
    }
    assert_eq!(fs::read(a.join("model.lccf")).unwrap(), fs::read(b.join("model.lccf")).unwrap());
    assert_eq!(fs::read(a.join("trace.csv")).unwrap(), fs::read(b.join("trace.csv")).unwrap());
}

#[test]
fn config_file_then_flags() {
    let tmp = TempDir::new().unwrap();
    let manifest = corpus(&tmp, 6, 40, 32, 4);
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"solver": "lc-lcf", "lc_lcf.maxiter": 5, "lambda": 0.01}"#).unwrap();
    let out = tmp.path().join("train");
    ok(&["train", "--manifest", s(&manifest), "--config", s(&cfg), "--lambda", "0.02", "--out", s(&out)]);
    let resolved = json(&out.join("config.json"));
    assert_eq!(resolved["solver"], "lc-lcf");
    assert_eq!(resolved["lc_lcf.maxiter"], 5);
    assert_eq!(resolved["lambda"], 0.02);
    assert_eq!(data_rows(&out.join("trace.csv")).len(), 5);

    fs::write(&cfg, r#"{"no.such.key": 1}"#).unwrap();
    assert_eq!(code(&["train", "--manifest", s(&manifest), "--config", s(&cfg), "--out", s(&out)]), 2);
    assert_eq!(code(&["train", "--manifest", s(&manifest), "--set", "lambda=-1", "--out", s(&out)]), 2);
}

#[test]
fn detect_recovers_training_annotation() {
    let tmp = TempDir::new().unwrap();
    let manifest = corpus(&tmp, 1, 48, 40, 5);
    let train = tmp.path().join("train");
    ok(&["train", "--manifest", s(&manifest), "--out", s(&train)]);
    let det = tmp.path().join("det");
    ok(&["detect", "--model", s(&train.join("model.lccf")), "--manifest", s(&manifest), "--out", s(&det)]);
    assert_run_dir(&det, &["detections.csv"]);
    let sample = &load_detection_corpus(&manifest).unwrap()[0];
    let rows = data_rows(&det.join("detections.csv"));
    let fields: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(fields[1].parse::<f64>().unwrap(), sample.peak.0 as f64);
    assert_eq!(fields[2].parse::<f64>().unwrap(), sample.peak.1 as f64);
}

#[test]
fn detections_match_in_process_pipeline() {
    let tmp = TempDir::new().unwrap();
    let train_manifest = corpus(&tmp, 10, 48, 40, 6);
    let test_manifest = corpus(&tmp, 5, 48, 40, 60);
    let train = tmp.path().join("train");
    ok(&["train", "--manifest", s(&train_manifest), "--feature", "hog", "--out", s(&train)]);
    let det = tmp.path().join("det");
    ok(&["detect", "--model", s(&train.join("model.lccf")), "--manifest", s(&test_manifest), "--out", s(&det)]);
    let filter = FilterSpectrum::load(&train.join("model.lccf")).unwrap();
    let samples = load_detection_corpus(&test_manifest).unwrap();
    for (row, sample) in data_rows(&det.join("detections.csv")).iter().zip(&samples) {
        let d = detect(&filter, &sample.load_image().unwrap()).unwrap();
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[0], sample.image.file_name().unwrap().to_str().unwrap());
        assert_eq!(f[1].parse::<f64>().unwrap(), d.row);
        assert_eq!(f[2].parse::<f64>().unwrap(), d.col);
        assert_eq!(f[3].parse::<f64>().unwrap(), d.score);
    }
}

#[test]
fn detect_edge_cases() {
    let tmp = TempDir::new().unwrap();
    let manifest = corpus(&tmp, 2, 48, 40, 7);
    let train = tmp.path().join("train");
    ok(&["train", "--manifest", s(&manifest), "--out", s(&train)]);
    let model = train.join("model.lccf");

    let empty = tmp.path().join("empty.csv");
    fs::write(&empty, "image,peak_row,peak_col\n").unwrap();
    let det = tmp.path().join("det");
    ok(&["detect", "--model", s(&model), "--manifest", s(&empty), "--out", s(&det)]);
    assert_eq!(fs::read_to_string(det.join("detections.csv")).unwrap(), "image,pred_row,pred_col,score\n");

    let other = corpus(&tmp, 2, 64, 40, 8);
    assert_eq!(code(&["detect", "--model", s(&model), "--manifest", s(&other), "--out", s(&det)]), 2);

    let missing = tmp.path().join("missing.csv");
    fs::write(&missing, "image,peak_row,peak_col\nnot_there.png,1,1\n").unwrap();
    assert_eq!(code(&["detect", "--model", s(&model), "--manifest", s(&missing), "--out", s(&det)]), 3);
}

/// Four images with eyes 20 px apart and detections 0, 1, 3 and 10 px off.
fn known_distance_fixture(tmp: &TempDir) -> (PathBuf, PathBuf) {
    let dir = tmp.path().join("fixture");
    fs::create_dir_all(&dir).unwrap();
    let mut samples = Vec::new();
    let mut det = String::from("image,pred_row,pred_col,score\n");
    for (i, off) in [0.0, 1.0, 3.0, 10.0].iter().enumerate() {
        let path = dir.join(format!("{i}.png"));
        save_image(&path, &ImagePlane::from_fn(40, 40, |r, c| ((r + c) % 7) as f64 / 7.0)).unwrap();
        samples.push(DetectionSample {
            image: path,
            peak: (10, 30),
            eyes: Some(((10, 10), (10, 30))),
        });
        det.push_str(&format!("{i}.png,{},30,1\n", 10.0 + off));
    }
    let manifest = dir.join("manifest.csv");
    write_manifest(&manifest, &samples).unwrap();
    let detections = dir.join("detections.csv");
    fs::write(&detections, det).unwrap();
    (manifest, detections)
}

#[test]
fn eval_detect_hand_counted_rates() {
    let tmp = TempDir::new().unwrap();
    let (manifest, detections) = known_distance_fixture(&tmp);
    let out = tmp.path().join("eval");
    ok(&["eval-detect", "--detections", s(&detections), "--manifest", s(&manifest), "--out", s(&out)]);
    assert_run_dir(&out, &["curves.csv"]);
    let (meta, curves) = read_curves(&out.join("curves.csv")).unwrap();
    assert!(meta.contains(&("normalization".to_string(), "interocular".to_string())));
    let curve = &curves[0];
    assert_eq!(curve.kind, CurveKind::Localization);
    assert_eq!(curve.thresholds.len(), 15);
    // normalized errors 0, 0.05, 0.15, 0.5 against strict thresholds
    for (t, v) in curve.thresholds.iter().zip(&curve.values) {
        let expected = [0.0, 0.05, 0.15, 0.5].iter().filter(|&&e| e < *t).count() as f64 / 4.0;
        assert_eq!(*v, expected, "tau {t}");
    }
    assert_eq!(curve.value_at(0.06), Some(0.5));
    assert_eq!(curve.value_at(0.16), Some(0.75));
}

#[test]
fn eval_detect_perfect_and_unmatched() {
    let tmp = TempDir::new().unwrap();
    let (manifest, detections) = known_distance_fixture(&tmp);
    let perfect = tmp.path().join("perfect.csv");
    let text: String = fs::read_to_string(&detections)
        .unwrap()
        .lines()
        .enumerate()
        .map(|(i, l)| if i == 0 { format!("{l}\n") } else { format!("{}.png,10,30,1\n", i - 1) })
        .collect();
    fs::write(&perfect, &text).unwrap();
    let out = tmp.path().join("eval");
    ok(&["eval-detect", "--detections", s(&perfect), "--manifest", s(&manifest), "--out", s(&out)]);
    let (_, curves) = read_curves(&out.join("curves.csv")).unwrap();
    assert!(curves[0].values.iter().all(|&v| v == 1.0));

    let short: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
    fs::write(&perfect, short).unwrap();
    assert_eq!(code(&["eval-detect", "--detections", s(&perfect), "--manifest", s(&manifest), "--out", s(&out)]), 3);
    fs::write(&perfect, format!("{text}extra.png,1,1,1\n")).unwrap();
    assert_eq!(code(&["eval-detect", "--detections", s(&perfect), "--manifest", s(&manifest), "--out", s(&out)]), 3);
}

#[test]
fn eval_detect_pixel_mode_without_eyes() {
    let tmp = TempDir::new().unwrap();
    let (manifest, detections) = known_distance_fixture(&tmp);
    let text = fs::read_to_string(&manifest).unwrap();
    let stripped: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if i == 0 { "image,peak_row,peak_col\n".to_string() } else { format!("{},{},{}\n", f[0], f[1], f[2]) }
        })
        .collect();
    fs::write(&manifest, stripped).unwrap();
    let out = tmp.path().join("eval");
    ok(&["eval-detect", "--detections", s(&detections), "--manifest", s(&manifest), "--out", s(&out)]);
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["normalization"], "pixel");
    assert_eq!(summary["mean_error"], 3.5);
    let (_, curves) = read_curves(&out.join("curves.csv")).unwrap();
    assert_eq!(curves[0].value_at(2.0), Some(0.5));
}

fn sequence(tmp: &TempDir, name: &str, motion: &MotionSpec, frames: u64, seed: u64) -> PathBuf {
    let dir = tmp.path().join(name);
    let set = |k: &str, v: String| format!("{k}={v}");
    ok(&[
        "synth", "track", "--out", s(&dir), "--frames", &frames.to_string(), "--seed", &seed.to_string(),
        "--width", &motion.frame_size.0.to_string(), "--height", &motion.frame_size.1.to_string(),
        "--set", &set("target.width", motion.target_size.0.to_string()),
        "--set", &set("target.height", motion.target_size.1.to_string()),
        "--set", &set("target.x", motion.start.0.to_string()),
        "--set", &set("target.y", motion.start.1.to_string()),
        "--set", &set("velocity.x", motion.velocity.0.to_string()),
        "--set", &set("velocity.y", motion.velocity.1.to_string()),
    ]);
    dir
}

fn motion(velocity: (f64, f64)) -> MotionSpec {
    MotionSpec {
        frame_size: (160, 120),
        target_size: (24, 20),
        start: (30.0, 40.0),
        velocity,
        allow_out_of_view: false,
    }
}

fn box_columns(path: &Path, cols: usize) -> Vec<String> {
    data_rows(path)
        .iter()
        .map(|r| r.split(',').take(cols).collect::<Vec<_>>().join(","))
        .collect()
}

#[test]
fn synthetic_ground_truth_follows_motion() {
    let tmp = TempDir::new().unwrap();
    let m = motion((1.5, -0.5));
    let dir = sequence(&tmp, "seq", &m, 12, 3);
    assert_run_dir(&dir, &["groundtruth_rect.txt"]);
    let gt = read_ground_truth(&dir.join("groundtruth_rect.txt")).unwrap();
    assert_eq!(gt.len(), 12);
    for (i, b) in gt.iter().enumerate() {
        assert_eq!(*b, m.bbox_at(i));
    }
    assert_eq!(fs::read_dir(dir.join("img")).unwrap().count(), 12);
}

#[test]
fn static_sequence_gives_constant_boxes() {
    let tmp = TempDir::new().unwrap();
    let dir = sequence(&tmp, "seq", &motion((0.0, 0.0)), 10, 1);
    let out = tmp.path().join("track");
    ok(&["track", "--sequence", s(&dir), "--out", s(&out)]);
    assert_run_dir(&out, &["boxes.csv"]);
    let boxes = box_columns(&out.join("boxes.csv"), 5);
    assert_eq!(boxes.len(), 10);
    for (i, b) in boxes.iter().enumerate() {
        assert_eq!(b, &format!("{},31,41,24,20", i + 1));
    }
}

#[test]
fn degenerate_lc_kcf_matches_kcf() {
    let tmp = TempDir::new().unwrap();
    let dir = sequence(&tmp, "seq", &motion((2.0, 1.0)), 25, 8);
    let kcf = tmp.path().join("kcf");
    let lc = tmp.path().join("lc");
    ok(&["track", "--sequence", s(&dir), "--tracker", "kcf", "--out", s(&kcf)]);
    ok(&["track", "--sequence", s(&dir), "--tracker", "lc-kcf", "--set", "tracker.sigma0=0",
        "--set", "tracker.window=0", "--out", s(&lc)]);
    assert_eq!(box_columns(&kcf.join("boxes.csv"), 6), box_columns(&lc.join("boxes.csv"), 6));
    let resolved = json(&kcf.join("config.json"));
    assert_eq!(resolved["tracker.sigma0"], 0.0);
    assert_eq!(resolved["tracker.window"], 0);
}

#[test]
fn track_echoes_defaults_and_rejects_bad_input() {
    let tmp = TempDir::new().unwrap();
    let dir = sequence(&tmp, "seq", &motion((1.0, 0.0)), 5, 2);
    let out = tmp.path().join("track");
    ok(&["track", "--sequence", s(&dir), "--out", s(&out)]);
    let resolved = json(&out.join("config.json"));
    assert_eq!(resolved["tracker.lambda"], 1e-4);
    assert_eq!(resolved["tracker.padding"], 1.5);
    assert_eq!(resolved["tracker.window"], 16);
    assert_eq!(resolved["tracker"], "lc-kcf");

    fs::write(dir.join("groundtruth_rect.txt"), "1,2,three,4\n").unwrap();
    assert_eq!(code(&["track", "--sequence", s(&dir), "--out", s(&out)]), 3);
    assert_eq!(code(&["track", "--sequence", s(&tmp.path().join("absent")), "--out", s(&out)]), 3);
    assert_eq!(code(&["track", "--sequence", s(&dir), "--set", "tracker.padding=-1", "--out", s(&out)]), 2);
}

#[test]
fn eval_track_on_exact_and_hand_built_boxes() {
    let tmp = TempDir::new().unwrap();
    let gt = tmp.path().join("gt.txt");
    fs::write(&gt, "1,1,10,10\n1,1,10,10\n").unwrap();
    let boxes = tmp.path().join("boxes.csv");
    let header = "frame_index,x,y,w,h,peak_score,sigma,epsilon\n";
    fs::write(&boxes, format!("{header}1,1,1,10,10,1,0,0\n2,1,1,10,10,1,0,0\n")).unwrap();
    let out = tmp.path().join("exact");
    ok(&["eval-track", "--boxes", s(&boxes), "--ground-truth", s(&gt), "--out", s(&out)]);
    assert_run_dir(&out, &["curves.csv"]);
    assert_eq!(json(&out.join("summary.json"))["precision_at_20px"], 1.0);
    assert_eq!(json(&out.join("summary.json"))["success_auc"], 1.0);

    // second box shifted by half its width: centre error 5, IoU 1/3
    fs::write(&boxes, format!("{header}1,1,1,10,10,1,0,0\n2,6,1,10,10,1,0,0\n")).unwrap();
    let out = tmp.path().join("shifted");
    ok(&["eval-track", "--boxes", s(&boxes), "--ground-truth", s(&gt), "--out", s(&out)]);
    let (meta, curves) = read_curves(&out.join("curves.csv")).unwrap();
    assert!(meta.contains(&("precision_at_20px".to_string(), "1".to_string())));
    let precision = curves.iter().find(|c| c.kind == CurveKind::Precision).unwrap();
    assert_eq!(precision.thresholds.len(), 50);
    assert_eq!(precision.value_at(4.0), Some(0.5));
    assert_eq!(precision.value_at(5.0), Some(1.0));
    let success = curves.iter().find(|c| c.kind == CurveKind::Success).unwrap();
    assert_eq!(success.value_at(0.3), Some(1.0));
    assert_eq!(success.value_at(0.35), Some(0.5));
    let auc = json(&out.join("summary.json"))["success_auc"].as_f64().unwrap();
    assert!((auc - 2.0 / 3.0).abs() < 1e-12);

    fs::write(&gt, "1,1,10,10\n").unwrap();
    assert_eq!(code(&["eval-track", "--boxes", s(&boxes), "--ground-truth", s(&gt), "--out", s(&out)]), 3);
}

#[test]
fn eval_track_reads_a_sequence_directory() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("Seq");
    let frames: Vec<ImagePlane> = (0..3).map(|i| ImagePlane::from_fn(80, 60, |r, c| ((r * 3 + c + i) % 9) as f64 / 9.0)).collect();
    let gt: Vec<BBox> = (0..3).map(|i| BBox::new(20.0 + i as f64, 15.0, 16.0, 16.0)).collect();
    save_sequence(&dir, &frames, &gt).unwrap();
    let out = tmp.path().join("track");
    ok(&["track", "--sequence", s(&dir), "--out", s(&out)]);
    let eval = tmp.path().join("eval");
    ok(&["eval-track", "--boxes", s(&out.join("boxes.csv")), "--ground-truth", s(&dir), "--out", s(&eval)]);
    assert!(json(&eval.join("summary.json"))["precision_at_20px"].is_number());
}

#[test]
fn corrupt_merges_clean_and_corrupted_rows() {
    let tmp = TempDir::new().unwrap();
    let manifest = corpus(&tmp, 5, 40, 32, 11);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        ok(&["corrupt", "--manifest", s(&manifest), "--kind", "occlusion", "--fraction", "0.2", "--seed", "4", "--out", s(dir)]);
    }
    assert_run_dir(&a, &["manifest.csv"]);
    let merged = load_detection_corpus(&a.join("manifest.csv")).unwrap();
    let source = load_detection_corpus(&manifest).unwrap();
    assert_eq!(merged.len(), 10);
    for (i, src) in source.iter().enumerate() {
        assert_eq!(merged[i].peak, src.peak);
        assert_eq!(merged[i + 5].eyes, src.eyes);
        let name = merged[i + 5].image.strip_prefix(&a).unwrap();
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
    }
}

#[test]
fn zero_variance_noise_keeps_pixels() {
    let tmp = TempDir::new().unwrap();
    let manifest = corpus(&tmp, 3, 40, 32, 12);
    let out = tmp.path().join("out");
    ok(&["corrupt", "--manifest", s(&manifest), "--kind", "noise", "--variance", "0", "--out", s(&out)]);
    let merged = load_detection_corpus(&out.join("manifest.csv")).unwrap();
    let source = load_detection_corpus(&manifest).unwrap();
    for (i, src) in source.iter().enumerate() {
        let original = src.load_image().unwrap();
        assert_eq!(merged[i + 3].load_image().unwrap(), original);
        assert_eq!(merged[i].load_image().unwrap(), original);
    }
    assert_eq!(code(&["corrupt", "--manifest", s(&manifest), "--variance", "-1", "--out", s(&out)]), 2);
}

#[test]
fn synth_detect_is_seeded() {
    let tmp = TempDir::new().unwrap();
    let a = corpus(&tmp, 10, 48, 40, 21);
    let b_dir = tmp.path().join("again");
    ok(&["synth", "detect", "--out", s(&b_dir), "--n", "10", "--width", "48", "--height", "40", "--seed", "21"]);
    let dir = a.parent().unwrap();
    assert_run_dir(dir, &["manifest.csv"]);
    let pngs = fs::read_dir(dir).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png")).count();
    assert_eq!(pngs, 10);
    assert_eq!(data_rows(&a).len(), 10);
    for i in 0..10 {
        let name = format!("{i:05}.png");
        assert_eq!(fs::read(dir.join(&name)).unwrap(), fs::read(b_dir.join(&name)).unwrap());
    }
    let expected = synth_detection_corpus(10, 48, 40, 21).unwrap();
    let loaded = load_detection_corpus(&a).unwrap();
    for (e, l) in expected.iter().zip(&loaded) {
        assert_eq!(Some(e.eyes), l.eyes);
    }
}
