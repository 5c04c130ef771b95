//! Annotated corpora, seeded synthetic benchmarks and the noise/occlusion
//! corruption protocol.
//!
//! Corruptions operate on `[0, 1]` intensities, before the zero-mean /
//! unit-variance normalization applied at training and test time. Every
//! generator is a pure function of its inputs and seed; per-sample random
//! streams are derived from the corpus seed so samples can be produced in
//! any order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::io;
use crate::signal::ImagePlane;

pub type Point = (usize, usize);

/// One annotated detection image; coordinates are `(row, col)` in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSample {
    pub image: PathBuf,
    pub peak: Point,
    /// `(left eye, right eye)` for interocular normalization.
    pub eyes: Option<(Point, Point)>,
}

impl DetectionSample {
    pub fn load_image(&self) -> Result<ImagePlane> {
        io::load_image(&self.image)
    }
}

const MANIFEST_HEADER: &str = "image,peak_row,peak_col";
const MANIFEST_EYES: &str = ",le_row,le_col,re_row,re_col";

/// Reads a detection manifest. Image paths are resolved against the
/// manifest's directory; every coordinate is checked against its image.
pub fn load_detection_corpus(manifest: &Path) -> Result<Vec<DetectionSample>> {
    let text = fs::read_to_string(manifest)?;
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let err = |line: usize, message: String| Error::Data {
        path: manifest.to_path_buf(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Ok(Vec::new());
    };
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let with_eyes = match columns.as_slice() {
        ["image", "peak_row", "peak_col"] => false,
        ["image", "peak_row", "peak_col", "le_row", "le_col", "re_row", "re_col"] => true,
        _ => return Err(err(1, format!("unexpected header {header:?}"))),
    };

    let mut samples = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(err(
                lineno,
                format!("expected {} fields, found {}", columns.len(), fields.len()),
            ));
        }
        let mut nums = Vec::with_capacity(fields.len() - 1);
        for f in &fields[1..] {
            nums.push(
                f.parse::<usize>()
                    .map_err(|_| err(lineno, format!("not a non-negative integer: {f:?}")))?,
            );
        }
        let rel = PathBuf::from(fields[0]);
        let image = if rel.is_absolute() { rel } else { base.join(rel) };
        if !image.is_file() {
            return Err(err(lineno, format!("missing image {}", image.display())));
        }
        let (w, h) = io::image_dimensions(&image).map_err(|e| err(lineno, e.to_string()))?;
        let check = |p: Point, what: &str| {
            if p.0 >= h || p.1 >= w {
                Err(err(
                    lineno,
                    format!("{what} ({}, {}) outside {w}x{h} image", p.0, p.1),
                ))
            } else {
                Ok(p)
            }
        };
        let peak = check((nums[0], nums[1]), "peak")?;
        let eyes = if with_eyes {
            Some((
                check((nums[2], nums[3]), "left eye")?,
                check((nums[4], nums[5]), "right eye")?,
            ))
        } else {
            None
        };
        samples.push(DetectionSample { image, peak, eyes });
    }
    Ok(samples)
}

/// Writes a manifest; image paths are made relative to `manifest`'s directory when possible.
pub fn write_manifest(manifest: &Path, samples: &[DetectionSample]) -> Result<()> {
    let base = manifest.parent().unwrap_or_else(|| Path::new(""));
    let with_eyes = !samples.is_empty() && samples.iter().all(|s| s.eyes.is_some());
    let mut text = String::from(MANIFEST_HEADER);
    if with_eyes {
        text.push_str(MANIFEST_EYES);
    }
    text.push('\n');
    for s in samples {
        let path = s.image.strip_prefix(base).unwrap_or(&s.image);
        let _ = write!(text, "{},{},{}", path.display(), s.peak.0, s.peak.1);
        if let (true, Some((le, re))) = (with_eyes, s.eyes) {
            let _ = write!(text, ",{},{},{},{}", le.0, le.1, re.0, re.1);
        }
        text.push('\n');
    }
    fs::write(manifest, text)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptionKind {
    GaussianNoise,
    Occlusion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub noise_variance: f64,
    pub occlusion_fraction: f64,
    pub rng_seed: u64,
}

impl CorruptionSpec {
    pub fn noise(variance: f64, seed: u64) -> Self {
        Self {
            kind: CorruptionKind::GaussianNoise,
            noise_variance: variance,
            occlusion_fraction: 0.0,
            rng_seed: seed,
        }
    }

    pub fn occlusion(fraction: f64, seed: u64) -> Self {
        Self {
            kind: CorruptionKind::Occlusion,
            noise_variance: 0.0,
            occlusion_fraction: fraction,
            rng_seed: seed,
        }
    }

    /// Applies the corruption with the spec's seed mixed with `stream`.
    pub fn apply(&self, image: &ImagePlane, stream: u64) -> Result<ImagePlane> {
        let seed = derive_seed(self.rng_seed, stream);
        match self.kind {
            CorruptionKind::GaussianNoise => add_gaussian_noise(image, self.noise_variance, seed),
            CorruptionKind::Occlusion => add_occlusion(image, self.occlusion_fraction, seed),
        }
    }
}

/// Independent seed for sub-stream `stream` of `seed` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_unit_range(image: &ImagePlane) -> Result<()> {
    if let Some(v) = image.data().iter().find(|v| !(-1e-12..=1.0 + 1e-12).contains(*v)) {
        return Err(Error::invalid(format!(
            "corruption expects intensities in [0, 1], found {v}"
        )));
    }
    Ok(())
}

/// Zero-mean Gaussian field of the given variance, unclamped.
pub fn gaussian_noise_field(width: usize, height: usize, variance: f64, seed: u64) -> Result<ImagePlane> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::invalid(format!("noise variance must be >= 0, got {variance}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(ImagePlane::from_fn(width, height, |_, _| normal.sample(&mut rng)))
}

/// Adds i.i.d. Gaussian noise and clamps back to `[0, 1]`.
pub fn add_gaussian_noise(image: &ImagePlane, variance: f64, seed: u64) -> Result<ImagePlane> {
    check_unit_range(image)?;
    let noise = gaussian_noise_field(image.width(), image.height(), variance, seed)?;
    if variance == 0.0 {
        return Ok(image.clone());
    }
    let data = image
        .data()
        .iter()
        .zip(noise.data())
        .map(|(v, n)| (v + n).clamp(0.0, 1.0))
        .collect();
    ImagePlane::new(image.width(), image.height(), data)
}

/// Occluding rectangle `(top, left, width, height)` for [`add_occlusion`].
pub fn occlusion_rect(
    width: usize,
    height: usize,
    fraction: f64,
    seed: u64,
) -> Result<(usize, usize, usize, usize)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("occlusion fraction must lie in (0, 1), got {fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area = ((fraction * (width * height) as f64).round() as usize).max(1);
    let aspect: f64 = rng.random_range(0.5..=2.0);
    let rw = ((area as f64 * aspect).sqrt().round() as usize).clamp(1, width);
    let rh = ((area as f64 / rw as f64).round() as usize).max(1);
    if rh > height {
        return Err(Error::invalid(format!(
            "occluder {rw}x{rh} does not fit a {width}x{height} image"
        )));
    }
    let top = rng.random_range(0..=height - rh);
    let left = rng.random_range(0..=width - rw);
    Ok((top, left, rw, rh))
}

/// Overwrites one random rectangle covering `fraction` of the image with zeros.
pub fn add_occlusion(image: &ImagePlane, fraction: f64, seed: u64) -> Result<ImagePlane> {
    let (top, left, rw, rh) = occlusion_rect(image.width(), image.height(), fraction, seed)?;
    let mut out = image.clone();
    for r in top..top + rh {
        for c in left..left + rw {
            out.set(r, c, 0.0);
        }
    }
    Ok(out)
}

/// In-memory synthetic detection sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub image: ImagePlane,
    /// Target glyph center (the right eye).
    pub peak: Point,
    pub eyes: (Point, Point),
}

/// Smooth random texture in roughly `[0.25, 0.75]`.
fn texture(width: usize, height: usize, rng: &mut ChaCha8Rng, waves: usize) -> ImagePlane {
    let comps: Vec<(f64, f64, f64, f64)> = (0..waves)
        .map(|_| {
            let fx = rng.random_range(0.02..0.15);
            let fy = rng.random_range(0.02..0.15);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let amp = rng.random_range(0.3..1.0);
            (fx, fy, phase, amp)
        })
        .collect();
    let norm: f64 = comps.iter().map(|c| c.3).sum::<f64>().max(1e-9);
    let mut plane = ImagePlane::from_fn(width, height, |r, c| {
        let s: f64 = comps
            .iter()
            .map(|&(fx, fy, ph, a)| a * (std::f64::consts::TAU * (fx * c as f64 + fy * r as f64) + ph).sin())
            .sum();
        0.5 + 0.2 * s / norm
    });
    for v in plane.data_mut() {
        *v = (*v + rng.random_range(-0.03..0.03)).clamp(0.0, 1.0);
    }
    plane
}

/// Ring with a bright core: the localization target.
fn draw_target(img: &mut ImagePlane, center: Point, contrast: f64) {
    let (cr, cc) = (center.0 as f64, center.1 as f64);
    for r in center.0.saturating_sub(6)..(center.0 + 7).min(img.height()) {
        for c in center.1.saturating_sub(6)..(center.1 + 7).min(img.width()) {
            let d = ((r as f64 - cr).powi(2) + (c as f64 - cc).powi(2)).sqrt();
            if d <= 1.5 {
                img.set(r, c, (0.5 + contrast).min(1.0));
            } else if (2.5..=4.5).contains(&d) {
                img.set(r, c, (0.5 - contrast).max(0.0));
            }
        }
    }
}

/// Filled square: the companion landmark.
fn draw_companion(img: &mut ImagePlane, center: Point, contrast: f64) {
    for r in center.0.saturating_sub(3)..(center.0 + 4).min(img.height()) {
        for c in center.1.saturating_sub(3)..(center.1 + 4).min(img.width()) {
            img.set(r, c, (0.5 - contrast).max(0.0));
        }
    }
}

/// Procedural scenes, each with a target glyph (right eye) and a companion
/// glyph (left eye) at a random horizontal separation.
pub fn synth_detection_corpus(n: usize, width: usize, height: usize, seed: u64) -> Result<Vec<SyntheticSample>> {
    if n == 0 {
        return Err(Error::invalid("corpus size must be at least 1"));
    }
    if width < 32 || height < 24 {
        return Err(Error::invalid(format!(
            "synthetic scenes need at least 32x24 pixels, got {width}x{height}"
        )));
    }
    Ok((0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let mut image = texture(width, height, &mut rng, 6);
            let margin = 7;
            let max_sep = (width - 2 * margin - 1).min(width / 2);
            let sep = rng.random_range((width / 4).max(9)..=max_sep.max((width / 4).max(9)));
            let row = rng.random_range(margin..height - margin);
            let left_col = rng.random_range(margin..width - margin - sep);
            let left = (row, left_col);
            let right = (row, left_col + sep);
            let contrast = rng.random_range(0.3..0.45);
            draw_companion(&mut image, left, contrast);
            draw_target(&mut image, right, contrast);
            SyntheticSample {
                image,
                peak: right,
                eyes: (left, right),
            }
        })
        .collect())
}

/// Writes synthetic samples as PNGs plus a manifest with eye columns.
pub fn save_detection_corpus(dir: &Path, samples: &[SyntheticSample]) -> Result<Vec<DetectionSample>> {
    fs::create_dir_all(dir)?;
    let mut out = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let path = dir.join(format!("{:05}.png", i));
        io::save_image(&path, &s.image)?;
        out.push(DetectionSample {
            image: path,
            peak: s.peak,
            eyes: Some(s.eyes),
        });
    }
    write_manifest(&dir.join("manifest.csv"), &out)?;
    Ok(out)
}

/// Constant-velocity target motion, positions rounded to whole pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionSpec {
    pub frame_size: (usize, usize),
    pub target_size: (usize, usize),
    /// Top-left corner on frame 0.
    pub start: (f64, f64),
    /// Pixels per frame along x and y.
    pub velocity: (f64, f64),
    pub allow_out_of_view: bool,
}

impl MotionSpec {
    pub fn bbox_at(&self, frame: usize) -> BBox {
        let t = frame as f64;
        BBox::new(
            (self.start.0 + self.velocity.0 * t).round(),
            (self.start.1 + self.velocity.1 * t).round(),
            self.target_size.0 as f64,
            self.target_size.1 as f64,
        )
    }
}

/// Occluder covering the left `fraction` of the target box on frames `first..=last`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionEvent {
    pub first: usize,
    pub last: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub frames: Vec<ImagePlane>,
    pub ground_truth: Vec<BBox>,
}

/// A textured target translating over a static textured background.
pub fn synth_tracking_sequence(
    n_frames: usize,
    motion: &MotionSpec,
    occlusion: Option<OcclusionEvent>,
    noise: Option<CorruptionSpec>,
    seed: u64,
) -> Result<SyntheticSequence> {
    if n_frames < 2 {
        return Err(Error::invalid("a sequence needs at least 2 frames"));
    }
    let (fw, fh) = motion.frame_size;
    let (tw, th) = motion.target_size;
    if tw == 0 || th == 0 || tw > fw || th > fh {
        return Err(Error::invalid("target must be non-empty and fit the frame"));
    }
    if let Some(ev) = occlusion {
        if !(ev.fraction > 0.0 && ev.fraction <= 1.0) || ev.first > ev.last {
            return Err(Error::invalid("invalid occlusion event"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let background = texture(fw, fh, &mut rng, 8);
    let occluder_value: f64 = rng.random_range(0.35..0.65);
    let cells = 4usize;
    let pattern: Vec<f64> = (0..cells * cells).map(|_| rng.random_range(0.0..1.0)).collect();
    let target = ImagePlane::from_fn(tw, th, |r, c| {
        let cell = pattern[(r * cells / th) * cells + c * cells / tw];
        let ring = if r == 0 || c == 0 || r + 1 == th || c + 1 == tw { 0.0 } else { cell };
        0.1 + 0.8 * ring
    });

    let mut frames = Vec::with_capacity(n_frames);
    let mut ground_truth = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let bbox = motion.bbox_at(t);
        let inside = bbox.x >= 0.0
            && bbox.y >= 0.0
            && bbox.x + bbox.w <= fw as f64
            && bbox.y + bbox.h <= fh as f64;
        if !inside && !motion.allow_out_of_view {
            return Err(Error::invalid(format!("target leaves the frame at frame {t}")));
        }
        let mut frame = background.clone();
        let (bx, by) = (bbox.x as isize, bbox.y as isize);
        let occluded_cols = match occlusion {
            Some(ev) if (ev.first..=ev.last).contains(&t) => (ev.fraction * tw as f64).round() as usize,
            _ => 0,
        };
        for r in 0..th {
            for c in 0..tw {
                let (fr, fc) = (by + r as isize, bx + c as isize);
                if fr < 0 || fc < 0 || fr >= fh as isize || fc >= fw as isize {
                    continue;
                }
                let v = if c < occluded_cols {
                    occluder_value
                } else {
                    target.get(r, c)
                };
                frame.set(fr as usize, fc as usize, v);
            }
        }
        if let Some(spec) = noise {
            frame = spec.apply(&frame, t as u64)?;
        }
        frames.push(frame);
        ground_truth.push(bbox);
    }
    Ok(SyntheticSequence {
        frames,
        ground_truth,
    })
}
