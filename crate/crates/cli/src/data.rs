//! corrupt and synth.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use lccf_core::datasets::{
    load_detection_corpus, save_detection_corpus, synth_detection_corpus, synth_tracking_sequence, write_manifest,
    CorruptionSpec, DetectionSample, MotionSpec, OcclusionEvent,
};
use lccf_core::io::{save_image, save_sequence};
use serde_json::json;

use crate::failure::{CliResult, Classify, Failure};
use crate::run::{path_value, Common, RunDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Corruption {
    Noise,
    Occlusion,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum)]
    pub kind: Option<Corruption>,
    /// Gaussian noise variance on [0, 1] intensities.
    #[arg(long)]
    pub variance: Option<f64>,
    /// Occluded fraction of the image area.
    #[arg(long)]
    pub fraction: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Detect,
    Track,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub kind: SynthKind,
    /// Number of detection scenes.
    #[arg(long)]
    pub n: Option<u64>,
    /// Number of tracking frames.
    #[arg(long)]
    pub frames: Option<u64>,
    #[arg(long)]
    pub width: Option<u64>,
    #[arg(long)]
    pub height: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

/// Writes clean copies and corrupted versions plus a merged manifest
/// (clean rows first, then corrupted rows in the same order).
pub fn corrupt(args: &CorruptArgs) -> CliResult<()> {
    let mut settings = args.common.settings(vec![
        ("input.manifest", json!("")),
        ("corruption.kind", json!("noise")),
        ("corruption.noise_variance", json!(0.1)),
        ("corruption.occlusion_fraction", json!(0.2)),
    ])?;
    settings.set("input.manifest", path_value(&args.manifest))?;
    settings.set_opt(
        "corruption.kind",
        args.kind.map(|k| match k {
            Corruption::Noise => "noise",
            Corruption::Occlusion => "occlusion",
        }),
    )?;
    settings.set_opt("corruption.noise_variance", args.variance)?;
    settings.set_opt("corruption.occlusion_fraction", args.fraction)?;
    let seed = settings.u64("seed")?;
    let spec = match settings.str("corruption.kind")? {
        "noise" => {
            let v = settings.f64("corruption.noise_variance")?;
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Failure::config(format!("noise variance must be >= 0, got {v}")));
            }
            CorruptionSpec::noise(v, seed)
        }
        "occlusion" => {
            let f = settings.f64("corruption.occlusion_fraction")?;
            if !(f > 0.0 && f < 1.0) {
                return Err(Failure::config(format!("occlusion fraction must lie in (0, 1), got {f}")));
            }
            CorruptionSpec::occlusion(f, seed)
        }
        other => return Err(Failure::config(format!("corruption.kind must be noise or occlusion, got {other:?}"))),
    };

    let samples = load_detection_corpus(&args.manifest).or_data(&format!("manifest {}", args.manifest.display()))?;
    let run = RunDir::create(&args.common.out)?;
    let clean_dir = run.file("clean");
    let corrupt_dir = run.file("corrupted");
    for dir in [&clean_dir, &corrupt_dir] {
        std::fs::create_dir_all(dir).or_data(&format!("creating {}", dir.display()))?;
    }
    let mut clean = Vec::with_capacity(samples.len());
    let mut corrupted = Vec::with_capacity(samples.len());
    for (i, sample) in samples.iter().enumerate() {
        let image = sample.load_image().or_data(&format!("image {}", sample.image.display()))?;
        let stem = sample
            .image
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let name = format!("{i:05}_{stem}.png");
        let altered = spec.apply(&image, i as u64).or_data(&format!("corrupting {}", sample.image.display()))?;
        let clean_path = clean_dir.join(&name);
        let corrupt_path = corrupt_dir.join(&name);
        save_image(&clean_path, &image).or_data("writing image")?;
        save_image(&corrupt_path, &altered).or_data("writing image")?;
        clean.push(DetectionSample {
            image: clean_path,
            ..sample.clone()
        });
        corrupted.push(DetectionSample {
            image: corrupt_path,
            ..sample.clone()
        });
    }
    clean.extend(corrupted);
    write_manifest(&run.file("manifest.csv"), &clean).or_data("writing manifest")?;
    run.finish(
        "corrupt",
        &settings,
        json!({
            "source_images": samples.len(),
            "rows": clean.len(),
            "manifest": "manifest.csv",
        }),
    )
}

pub fn synth(args: &SynthArgs) -> CliResult<()> {
    match args.kind {
        SynthKind::Detect => synth_detect(args),
        SynthKind::Track => synth_track(args),
    }
}

fn synth_detect(args: &SynthArgs) -> CliResult<()> {
    let mut settings = args.common.settings(vec![
        ("kind", json!("detect")),
        ("n", json!(100)),
        ("width", json!(48)),
        ("height", json!(48)),
    ])?;
    settings.set_opt("n", args.n)?;
    settings.set_opt("width", args.width)?;
    settings.set_opt("height", args.height)?;
    let samples = synth_detection_corpus(
        settings.usize("n")?,
        settings.usize("width")?,
        settings.usize("height")?,
        settings.u64("seed")?,
    )
    .or_config("synthetic corpus")?;
    let run = RunDir::create(&args.common.out)?;
    save_detection_corpus(run.path(), &samples).or_data("writing corpus")?;
    run.finish(
        "synth",
        &settings,
        json!({ "kind": "detect", "images": samples.len(), "manifest": "manifest.csv" }),
    )
}

fn synth_track(args: &SynthArgs) -> CliResult<()> {
    let mut settings = args.common.settings(vec![
        ("kind", json!("track")),
        ("frames", json!(100)),
        ("width", json!(280)),
        ("height", json!(120)),
        ("target.width", json!(24)),
        ("target.height", json!(24)),
        ("target.x", json!(20.0)),
        ("target.y", json!(48.0)),
        ("velocity.x", json!(2.0)),
        ("velocity.y", json!(0.0)),
        ("allow_out_of_view", json!(false)),
        ("occlusion.first", json!(40)),
        ("occlusion.last", json!(50)),
        ("occlusion.fraction", json!(0.0)),
        ("noise_variance", json!(0.0)),
    ])?;
    settings.set_opt("frames", args.frames)?;
    settings.set_opt("width", args.width)?;
    settings.set_opt("height", args.height)?;
    let seed = settings.u64("seed")?;
    let motion = MotionSpec {
        frame_size: (settings.usize("width")?, settings.usize("height")?),
        target_size: (settings.usize("target.width")?, settings.usize("target.height")?),
        start: (settings.f64("target.x")?, settings.f64("target.y")?),
        velocity: (settings.f64("velocity.x")?, settings.f64("velocity.y")?),
        allow_out_of_view: settings.bool("allow_out_of_view")?,
    };
    let fraction = settings.f64("occlusion.fraction")?;
    let occlusion = (fraction > 0.0)
        .then(|| -> CliResult<OcclusionEvent> {
            Ok(OcclusionEvent {
                first: settings.usize("occlusion.first")?,
                last: settings.usize("occlusion.last")?,
                fraction,
            })
        })
        .transpose()?;
    let variance = settings.f64("noise_variance")?;
    let noise = (variance > 0.0).then(|| CorruptionSpec::noise(variance, seed));
    let seq = synth_tracking_sequence(settings.usize("frames")?, &motion, occlusion, noise, seed)
        .or_config("synthetic sequence")?;
    let run = RunDir::create(&args.common.out)?;
    save_sequence(run.path(), &seq.frames, &seq.ground_truth).or_data("writing sequence")?;
    run.finish(
        "synth",
        &settings,
        json!({ "kind": "track", "frames": seq.frames.len(), "ground_truth": "groundtruth_rect.txt" }),
    )
}
