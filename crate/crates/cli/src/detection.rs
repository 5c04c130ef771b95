//! train, detect and eval-detect.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use lccf_core::datasets::{load_detection_corpus, DetectionSample};
use lccf_core::detection::{self, DetectorConfig};
use lccf_core::evaluation::{
    format_curves, interocular_distance, localization_curve, parse_grid, pixel_deviation, Curve,
};
use lccf_core::linear_cf::{objective, solve_mccf, FilterSpectrum, LcLcfSolver};
use lccf_core::{FeatureConfig, ImagePlane, LcLcfConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::failure::{CliResult, Classify, Failure};
use crate::run::{label, num, path_value, Common, RunDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Mccf,
    LcLcf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training manifest (image,peak_row,peak_col[,eyes]).
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum)]
    pub solver: Option<Solver>,
    #[arg(long)]
    pub maxiter: Option<u64>,
    /// `gray`, `hog` or a full feature descriptor.
    #[arg(long)]
    pub feature: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvalDetectArgs {
    /// CSV written by `lccf detect`.
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Interocular-normalized thresholds, `start:step:end`.
    #[arg(long)]
    pub tau_grid: Option<String>,
    /// Pixel thresholds used when the corpus has no eye annotations.
    #[arg(long)]
    pub pixel_grid: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

fn load_corpus(manifest: &Path) -> CliResult<Vec<DetectionSample>> {
    load_detection_corpus(manifest).or_data(&format!("manifest {}", manifest.display()))
}

fn load_image(sample: &DetectionSample) -> CliResult<ImagePlane> {
    sample.load_image().or_data(&format!("image {}", sample.image.display()))
}

/// Image key as written in detection CSVs: the path relative to the manifest.
fn image_key(sample: &DetectionSample, manifest: &Path) -> String {
    let base = manifest.parent().unwrap_or_else(|| Path::new(""));
    sample
        .image
        .strip_prefix(base)
        .unwrap_or(&sample.image)
        .display()
        .to_string()
}

pub fn train(args: &TrainArgs) -> CliResult<()> {
    let defaults = LcLcfConfig::default();
    let detector = DetectorConfig::default();
    let mut settings = args.common.settings(vec![
        ("input.manifest", json!("")),
        ("solver", json!("mccf")),
        ("feature", json!("gray")),
        ("lambda", json!(detector.lambda)),
        ("response_variance", json!(detector.response_variance)),
        ("lc_lcf.maxiter", json!(defaults.maxiter)),
        ("lc_lcf.sigma0", json!(defaults.sigma0)),
        ("lc_lcf.eta", json!(defaults.eta)),
        ("lc_lcf.initial_fraction", json!(defaults.initial_fraction)),
    ])?;
    settings.set("input.manifest", path_value(&args.manifest))?;
    settings.set_opt(
        "solver",
        args.solver.map(|s| match s {
            Solver::Mccf => "mccf",
            Solver::LcLcf => "lc-lcf",
        }),
    )?;
    settings.set_opt("lc_lcf.maxiter", args.maxiter)?;
    settings.set_opt("feature", args.feature.clone())?;
    settings.set_opt("lambda", args.lambda)?;

    let solver = match settings.str("solver")? {
        "mccf" => Solver::Mccf,
        "lc-lcf" => Solver::LcLcf,
        other => return Err(Failure::config(format!("solver must be mccf or lc-lcf, got {other:?}"))),
    };
    let feature = settings.str("feature")?.parse::<FeatureConfig>().or_config("feature")?;
    let config = DetectorConfig {
        feature,
        response_variance: settings.f64("response_variance")?,
        lambda: settings.f64("lambda")?,
    };
    config.validate().or_config("detector")?;
    let lc = LcLcfConfig {
        maxiter: settings.usize("lc_lcf.maxiter")?,
        sigma0: settings.f64("lc_lcf.sigma0")?,
        eta: settings.f64("lc_lcf.eta")?,
        initial_fraction: settings.f64("lc_lcf.initial_fraction")?,
    };
    if solver == Solver::LcLcf {
        lc.validate().or_config("lc_lcf")?;
    }

    let mut samples = load_corpus(&args.manifest)?;
    if samples.is_empty() {
        return Err(Failure::data(format!("{} lists no images", args.manifest.display())));
    }
    let seed = settings.u64("seed")?;
    samples.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let images = samples.iter().map(load_image).collect::<CliResult<Vec<_>>>()?;
    let set = detection::training_set(images.iter().zip(samples.iter().map(|s| s.peak)), &config)
        .or_data("building training set")?;

    let mut trace = String::from("iteration,epsilon,sigma,subset_size\n");
    let filter = match solver {
        Solver::Mccf => solve_mccf(&set).or_data("solving MCCF")?,
        Solver::LcLcf => {
            let solution = LcLcfSolver::new(lc).solve(&set).or_data("solving LC-LCF")?;
            for t in &solution.trace {
                let _ = writeln!(trace, "{},{},{},{}", t.iteration, num(t.epsilon), num(t.sigma), t.subset_size);
            }
            solution.filter
        }
    };
    let run = RunDir::create(&args.common.out)?;
    let model = run.file("model.lccf");
    filter.save(&model).or_data("writing model")?;
    run.write("trace.csv", &trace)?;
    let energy = objective(&set, &filter).or_data("evaluating objective")?;
    run.finish(
        "train",
        &settings,
        json!({
            "solver": settings.str("solver")?,
            "samples": set.len(),
            "channels": filter.num_channels(),
            "width": filter.width(),
            "height": filter.height(),
            "objective": energy,
            "iterations": trace.lines().count() - 1,
            "model": "model.lccf",
            "trace": "trace.csv",
        }),
    )
}

pub fn detect(args: &DetectArgs) -> CliResult<()> {
    let mut settings = args
        .common
        .settings(vec![("input.model", json!("")), ("input.manifest", json!(""))])?;
    settings.set("input.model", path_value(&args.model))?;
    settings.set("input.manifest", path_value(&args.manifest))?;
    let filter = FilterSpectrum::load(&args.model).or_data(&format!("model {}", args.model.display()))?;
    let samples = load_corpus(&args.manifest)?;

    let mut csv = String::from("image,pred_row,pred_col,score\n");
    for sample in &samples {
        let image = load_image(sample)?;
        let (gw, gh) = filter.feature().grid_size(image.width(), image.height());
        if (gw, gh) != (filter.width(), filter.height()) {
            return Err(Failure::config(format!(
                "model expects a {}x{} feature grid but {} gives {gw}x{gh}",
                filter.width(),
                filter.height(),
                sample.image.display()
            )));
        }
        let d = detection::detect(&filter, &image).or_config("applying model")?;
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            image_key(sample, &args.manifest),
            num(d.row),
            num(d.col),
            num(d.score)
        );
    }
    let run = RunDir::create(&args.common.out)?;
    run.write("detections.csv", &csv)?;
    run.finish(
        "detect",
        &settings,
        json!({
            "images": samples.len(),
            "model_feature": filter.feature().to_string(),
            "detections": "detections.csv",
        }),
    )
}

/// `image → (row, col)` from a detections CSV.
pub fn read_detections(path: &Path) -> CliResult<BTreeMap<String, (f64, f64)>> {
    let text = fs::read_to_string(path).or_data(&format!("reading {}", path.display()))?;
    let fail = |line: usize, msg: String| Failure::data(format!("{}:{line}: {msg}", path.display()));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == "image,pred_row,pred_col,score" => {}
        _ => return Err(fail(1, "expected header image,pred_row,pred_col,score".into())),
    }
    let mut out = BTreeMap::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(fail(i + 1, format!("expected 4 fields, found {}", fields.len())));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|_| fail(i + 1, format!("not a number: {s:?}")));
        let pos = (parse(fields[1])?, parse(fields[2])?);
        if out.insert(fields[0].to_string(), pos).is_some() {
            return Err(fail(i + 1, format!("duplicate image {}", fields[0])));
        }
    }
    Ok(out)
}

pub fn eval_detect(args: &EvalDetectArgs) -> CliResult<()> {
    let mut settings = args.common.settings(vec![
        ("input.detections", json!("")),
        ("input.manifest", json!("")),
        ("tau_grid", json!("0.02:0.02:0.3")),
        ("pixel_grid", json!("1:1:20")),
    ])?;
    settings.set("input.detections", path_value(&args.detections))?;
    settings.set("input.manifest", path_value(&args.manifest))?;
    settings.set_opt("tau_grid", args.tau_grid.clone())?;
    settings.set_opt("pixel_grid", args.pixel_grid.clone())?;
    let tau_grid = parse_grid(settings.str("tau_grid")?).or_config("tau_grid")?;
    let pixel_grid = parse_grid(settings.str("pixel_grid")?).or_config("pixel_grid")?;

    let samples = load_corpus(&args.manifest)?;
    if samples.is_empty() {
        return Err(Failure::data(format!("{} lists no images", args.manifest.display())));
    }
    let mut detections = read_detections(&args.detections)?;
    let interocular = samples.iter().all(|s| s.eyes.is_some());
    let mut errors = Vec::with_capacity(samples.len());
    for sample in &samples {
        let key = image_key(sample, &args.manifest);
        let pred = detections
            .remove(&key)
            .ok_or_else(|| Failure::data(format!("no detection for {key}")))?;
        let truth = (sample.peak.0 as f64, sample.peak.1 as f64);
        let err = match sample.eyes {
            Some((le, re)) if interocular => interocular_distance(
                pred,
                truth,
                (le.0 as f64, le.1 as f64),
                (re.0 as f64, re.1 as f64),
            )
            .or_data(&key)?,
            _ => pixel_deviation(pred, truth),
        };
        errors.push(err);
    }
    if let Some(extra) = detections.keys().next() {
        return Err(Failure::data(format!("detection for {extra} has no manifest row")));
    }

    let (normalization, grid) = if interocular {
        ("interocular", &tau_grid)
    } else {
        ("pixel", &pixel_grid)
    };
    let curve: Curve = localization_curve(&errors, grid).or_config("threshold grid")?;
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    let mut sorted = errors.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let metadata = vec![
        ("normalization".to_string(), normalization.to_string()),
        ("samples".to_string(), errors.len().to_string()),
    ];
    let run = RunDir::create(&args.common.out)?;
    run.write("curves.csv", &format_curves(std::slice::from_ref(&curve), &metadata))?;
    let rates: serde_json::Map<String, Value> = curve
        .thresholds
        .iter()
        .zip(&curve.values)
        .map(|(t, v)| (label(*t), json!(v)))
        .collect();
    run.finish(
        "eval-detect",
        &settings,
        json!({
            "normalization": normalization,
            "samples": errors.len(),
            "mean_error": mean,
            "median_error": median,
            "rates": rates,
            "curves": "curves.csv",
        }),
    )
}
