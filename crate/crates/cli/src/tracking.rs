//! track and eval-track.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use lccf_core::evaluation::{format_curves, parse_grid, precision_curve, success_curve};
use lccf_core::io::{find_ground_truth, load_sequence, read_ground_truth};
use lccf_core::kernel_cf::{track_sequence, FrameRecord};
use lccf_core::{BBox, FeatureConfig, TrackerConfig, TrackerMode};
use serde_json::json;

use crate::failure::{CliResult, Classify, Failure};
use crate::run::{num, path_value, Common, RunDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Tracker {
    Kcf,
    LcKcf,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Sequence directory: numbered frames plus groundtruth_rect.txt.
    #[arg(long)]
    pub sequence: PathBuf,
    #[arg(long, value_enum)]
    pub tracker: Option<Tracker>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvalTrackArgs {
    /// CSV written by `lccf track`.
    #[arg(long)]
    pub boxes: PathBuf,
    /// Ground-truth file or sequence directory.
    #[arg(long)]
    pub ground_truth: PathBuf,
    /// Free-form label, e.g. a sequence attribute.
    #[arg(long)]
    pub attribute: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

const BOXES_HEADER: &str = "frame_index,x,y,w,h,peak_score,sigma,epsilon";

/// Boxes CSV with 1-based frame indices and 1-based top-left corners.
pub fn format_boxes(records: &[FrameRecord]) -> String {
    let mut out = format!("{BOXES_HEADER}\n");
    for (i, r) in records.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            i + 1,
            num(r.bbox.x + 1.0),
            num(r.bbox.y + 1.0),
            num(r.bbox.w),
            num(r.bbox.h),
            num(r.score),
            num(r.sigma),
            num(r.epsilon)
        );
    }
    out
}

pub fn read_boxes(path: &Path) -> CliResult<Vec<BBox>> {
    let text = fs::read_to_string(path).or_data(&format!("reading {}", path.display()))?;
    let fail = |line: usize, msg: String| Failure::data(format!("{}:{line}: {msg}", path.display()));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == BOXES_HEADER => {}
        _ => return Err(fail(1, format!("expected header {BOXES_HEADER}"))),
    }
    let mut boxes = Vec::new();
    for (i, line) in lines {
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| fail(i + 1, "non-numeric field".into()))?;
        if fields.len() != 8 {
            return Err(fail(i + 1, format!("expected 8 fields, found {}", fields.len())));
        }
        if fields[0] as usize != boxes.len() + 1 {
            return Err(fail(i + 1, format!("frame index {} out of order", fields[0])));
        }
        boxes.push(BBox::new(fields[1] - 1.0, fields[2] - 1.0, fields[3], fields[4]));
    }
    Ok(boxes)
}

fn tracker_name(mode: TrackerMode) -> &'static str {
    match mode {
        TrackerMode::Kcf => "kcf",
        TrackerMode::LcKcf => "lc-kcf",
    }
}

pub fn track(args: &TrackArgs) -> CliResult<()> {
    let d = TrackerConfig::default();
    let mut settings = args.common.settings(vec![
        ("input.sequence", json!("")),
        ("tracker", json!("lc-kcf")),
        ("tracker.lambda", json!(d.lambda)),
        ("tracker.sigma0", json!(d.sigma0)),
        ("tracker.growth", json!(d.growth)),
        ("tracker.window", json!(d.window.unwrap_or(0))),
        ("tracker.padding", json!(d.padding)),
        ("tracker.kernel_sigma", json!(d.kernel_sigma)),
        ("tracker.kernel_normalize", json!(d.kernel_normalize)),
        ("tracker.rho", json!(d.rho)),
        ("tracker.output_sigma_factor", json!(d.output_sigma_factor)),
        ("tracker.feature", json!(d.feature.to_string())),
    ])?;
    settings.set("input.sequence", path_value(&args.sequence))?;
    settings.set_opt("tracker", args.tracker.map(|t| tracker_name(match t {
        Tracker::Kcf => TrackerMode::Kcf,
        Tracker::LcKcf => TrackerMode::LcKcf,
    })))?;
    let mode = match settings.str("tracker")? {
        "kcf" => TrackerMode::Kcf,
        "lc-kcf" => TrackerMode::LcKcf,
        other => return Err(Failure::config(format!("tracker must be kcf or lc-kcf, got {other:?}"))),
    };
    if mode == TrackerMode::Kcf {
        // the degenerate configuration, echoed so the run records what was used
        settings.set("tracker.sigma0", json!(0.0))?;
        settings.set("tracker.window", json!(0))?;
    }
    let feature = settings.str("tracker.feature")?.parse::<FeatureConfig>().or_config("tracker.feature")?;
    let window = settings.usize("tracker.window")?;
    let config = TrackerConfig {
        mode,
        lambda: settings.f64("tracker.lambda")?,
        sigma0: settings.f64("tracker.sigma0")?,
        growth: settings.f64("tracker.growth")?,
        window: (window > 0).then_some(window),
        padding: settings.f64("tracker.padding")?,
        kernel_sigma: settings.f64("tracker.kernel_sigma")?,
        kernel_normalize: settings.bool("tracker.kernel_normalize")?,
        rho: settings.f64("tracker.rho")?,
        output_sigma_factor: settings.f64("tracker.output_sigma_factor")?,
        feature,
    };
    config.validate().or_config("tracker")?;

    let seq = load_sequence(&args.sequence).or_data(&format!("sequence {}", args.sequence.display()))?;
    let records = track_sequence(&seq.frames, seq.ground_truth[0], &config).or_data("tracking")?;
    let run = RunDir::create(&args.common.out)?;
    run.write("boxes.csv", &format_boxes(&records))?;

    let mut summary = json!({
        "tracker": tracker_name(mode),
        "frames": records.len(),
        "final_sigma": records.last().map(|r| r.sigma),
        "boxes": "boxes.csv",
    });
    if seq.ground_truth.len() == records.len() {
        let pred: Vec<BBox> = records.iter().map(|r| r.bbox).collect();
        let errors: Vec<f64> = pred.iter().zip(&seq.ground_truth).map(|(p, t)| p.center_distance(t)).collect();
        summary["mean_center_error"] = json!(errors.iter().sum::<f64>() / errors.len() as f64);
        let at20 = precision_curve(&pred, &seq.ground_truth, &[20.0]).or_data("precision")?;
        summary["precision_at_20px"] = json!(at20.values[0]);
    }
    run.finish("track", &settings, summary)
}

pub fn eval_track(args: &EvalTrackArgs) -> CliResult<()> {
    let mut settings = args.common.settings(vec![
        ("input.boxes", json!("")),
        ("input.ground_truth", json!("")),
        ("precision_grid", json!("1:1:50")),
        ("success_grid", json!("0:0.05:1")),
        ("attribute", json!("")),
    ])?;
    settings.set("input.boxes", path_value(&args.boxes))?;
    settings.set("input.ground_truth", path_value(&args.ground_truth))?;
    settings.set_opt("attribute", args.attribute.clone())?;
    let precision_grid = parse_grid(settings.str("precision_grid")?).or_config("precision_grid")?;
    let success_grid = parse_grid(settings.str("success_grid")?).or_config("success_grid")?;

    let gt_path = if args.ground_truth.is_dir() {
        find_ground_truth(&args.ground_truth).ok_or_else(|| {
            Failure::data(format!("no ground-truth file in {}", args.ground_truth.display()))
        })?
    } else {
        args.ground_truth.clone()
    };
    let truth = read_ground_truth(&gt_path).or_data("ground truth")?;
    let pred = read_boxes(&args.boxes)?;
    if pred.len() != truth.len() {
        return Err(Failure::data(format!(
            "{} has {} boxes but the ground truth has {}",
            args.boxes.display(),
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Failure::data("no frames to evaluate"));
    }
    let precision = precision_curve(&pred, &truth, &precision_grid).or_config("precision_grid")?;
    let (success, auc) = success_curve(&pred, &truth, &success_grid).or_data("success")?;
    let at20 = precision_curve(&pred, &truth, &[20.0]).or_data("precision")?.values[0];
    let mean_error = pred.iter().zip(&truth).map(|(p, t)| p.center_distance(t)).sum::<f64>() / pred.len() as f64;

    let mut metadata = vec![
        ("frames".to_string(), pred.len().to_string()),
        ("precision_at_20px".to_string(), num(at20)),
        ("success_auc".to_string(), num(auc)),
    ];
    let attribute = settings.str("attribute")?.to_string();
    if !attribute.is_empty() {
        metadata.push(("attribute".to_string(), attribute.clone()));
    }
    let run = RunDir::create(&args.common.out)?;
    run.write("curves.csv", &format_curves(&[precision, success], &metadata))?;
    run.finish(
        "eval-track",
        &settings,
        json!({
            "frames": pred.len(),
            "precision_at_20px": at20,
            "success_auc": auc,
            "mean_center_error": mean_error,
            "attribute": attribute,
            "curves": "curves.csv",
        }),
    )
}
