//! Kernelized correlation filters (KCF) and the latent-constrained tracker
//! (LC-KCF).
//!
//! All dual-space arithmetic is elementwise in the frequency domain: the
//! Gaussian kernel matrix over cyclic shifts is circulant, so
//! `(K + λI)⁻¹y` becomes `ŷ ⊘ (k̂ˣˣ + λ)`. LC-KCF replaces the plain solution
//! by the blend `α̂ᵗ⁺¹ = η ⊙ α̂ + (1 − η) ⊙ β̂ᵗ` with
//! `η = (k̂ˣˣ + λ) ⊘ (k̂ˣˣ + λ + σ)`, where `β̂` is the projection of the new
//! solution onto the window of past solutions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::features::{extract, FeatureConfig, FeatureMap};
use crate::geometry::BBox;
use crate::linear_cf::detect_peak;
use crate::sadmm::{project_subspace, PenaltyMode, PenaltySchedule, SubspaceHistory};
use crate::signal::{complex_distance, fft2, gaussian_response, ifft2, ImagePlane, Spectrum};

/// Denominator moduli below this are singular.
pub const SINGULAR_DENOMINATOR: f64 = 1e-12;

/// Frequency-domain dual variable (`α̂` or `β̂`).
#[derive(Debug, Clone, PartialEq)]
pub struct DualSpectrum(pub Spectrum);

impl DualSpectrum {
    pub fn spectrum(&self) -> &Spectrum {
        &self.0
    }

    pub fn data(&self) -> &[Complex64] {
        self.0.data()
    }
}

/// Gaussian kernel `exp(-‖z − x‖² / σ²)`.
///
/// With `normalize` set the squared distance is divided by the number of
/// feature elements, which keeps the bandwidth meaningful for large windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    pub sigma: f64,
    pub normalize: bool,
}

impl GaussianKernel {
    /// Kernel exactly as written: no size normalization.
    pub fn plain(sigma: f64) -> Self {
        Self {
            sigma,
            normalize: false,
        }
    }

    pub fn normalized(sigma: f64) -> Self {
        Self {
            sigma,
            normalize: true,
        }
    }
}

/// Spectrum of `k(τ) = exp(-(‖x‖² + ‖z‖² − 2·Σ_k (z_k ⋆ x_k)(τ)) / σ²)`.
pub fn kernel_crosscorrelation(
    z: &FeatureMap,
    x: &FeatureMap,
    kernel: &GaussianKernel,
) -> Result<Spectrum> {
    if !z.same_shape(x) {
        return Err(Error::mismatch(
            format!("K={} {}x{}", x.num_channels(), x.width(), x.height()),
            format!("K={} {}x{}", z.num_channels(), z.width(), z.height()),
        ));
    }
    if !(kernel.sigma > 0.0) {
        return Err(Error::invalid(format!("kernel sigma must be positive, got {}", kernel.sigma)));
    }
    let (w, h) = (x.width(), x.height());
    let mut cross = Spectrum::zeros(w, h);
    for (zc, xc) in z.channels().iter().zip(x.channels()) {
        let zs = fft2(zc)?;
        let xs = fft2(xc)?;
        for ((acc, a), b) in cross.data_mut().iter_mut().zip(zs.data()).zip(xs.data()) {
            *acc += a * b.conj();
        }
    }
    let cross = ifft2(&cross)?;
    let total = x.squared_norm() + z.squared_norm();
    let scale = if kernel.normalize {
        (w * h * x.num_channels()) as f64
    } else {
        1.0
    };
    let sigma2 = kernel.sigma * kernel.sigma;
    let k = ImagePlane::from_fn(w, h, |r, c| {
        let dist = (total - 2.0 * cross.get(r, c)).max(0.0) / scale;
        (-dist / sigma2).exp()
    });
    fft2(&k)
}

pub fn kernel_autocorrelation(x: &FeatureMap, kernel: &GaussianKernel) -> Result<Spectrum> {
    kernel_crosscorrelation(x, x, kernel)
}

fn check_denominator(d: Complex64, bin: usize) -> Result<()> {
    if d.norm() < SINGULAR_DENOMINATOR {
        return Err(Error::SingularBin { bin, row: 0, col: 0 });
    }
    Ok(())
}

/// Kernel ridge regression in the Fourier domain: `α̂ = ŷ ⊘ (k̂ˣˣ + λ)`.
pub fn solve_kcf(kxx: &Spectrum, yhat: &Spectrum, lambda: f64) -> Result<DualSpectrum> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    if !kxx.same_shape(yhat) {
        return Err(Error::mismatch(
            format!("{}x{}", kxx.width(), kxx.height()),
            format!("{}x{}", yhat.width(), yhat.height()),
        ));
    }
    let mut out = Vec::with_capacity(kxx.len());
    for (bin, (k, y)) in kxx.data().iter().zip(yhat.data()).enumerate() {
        let denom = k + lambda;
        check_denominator(denom, bin)?;
        out.push(y / denom);
    }
    Ok(DualSpectrum(Spectrum::new(kxx.width(), kxx.height(), out)?))
}

/// Per-bin blend weights `η = (k̂ˣˣ + λ) ⊘ (k̂ˣˣ + λ + σ)`, computed as `1 − σ ⊘ (k̂ˣˣ + λ + σ)`.
pub fn blend_weights(kxx: &Spectrum, lambda: f64, sigma: f64) -> Result<Vec<Complex64>> {
    if !(sigma >= 0.0) {
        return Err(Error::invalid(format!("sigma must be >= 0, got {sigma}")));
    }
    kxx.data()
        .iter()
        .enumerate()
        .map(|(bin, k)| {
            let denom = k + lambda + sigma;
            check_denominator(denom, bin)?;
            Ok(Complex64::new(1.0, 0.0) - Complex64::new(sigma, 0.0) / denom)
        })
        .collect()
}

/// Latent-constrained dual update `η ⊙ α̂_kcf + (1 − η) ⊙ β̂`.
pub fn lc_kcf_alpha_update(
    alpha_kcf: &DualSpectrum,
    beta: &DualSpectrum,
    kxx: &Spectrum,
    lambda: f64,
    sigma: f64,
) -> Result<DualSpectrum> {
    if !alpha_kcf.0.same_shape(&beta.0) || !alpha_kcf.0.same_shape(kxx) {
        return Err(Error::invalid("alpha, beta and kernel spectra differ in size"));
    }
    let eta = blend_weights(kxx, lambda, sigma)?;
    let one = Complex64::new(1.0, 0.0);
    let data = eta
        .iter()
        .zip(alpha_kcf.data())
        .zip(beta.data())
        .map(|((e, a), b)| e * a + (one - e) * b)
        .collect();
    Ok(DualSpectrum(Spectrum::new(kxx.width(), kxx.height(), data)?))
}

/// Which dual update the tracker applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackerMode {
    /// Plain KCF: `α̂ = ŷ ⊘ (k̂ˣˣ + λ)` on every frame.
    Kcf,
    /// Latent-constrained blend with the subspace projection.
    LcKcf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub mode: TrackerMode,
    pub lambda: f64,
    pub sigma0: f64,
    /// Penalty growth factor `c`.
    pub growth: f64,
    /// Subspace window `T`; `None` disables the history (β̂ follows α̂).
    pub window: Option<usize>,
    /// Search window is `(1 + padding)` times the target size.
    pub padding: f64,
    pub kernel_sigma: f64,
    pub kernel_normalize: bool,
    /// Template adaptation rate `ρ`.
    pub rho: f64,
    /// Label bandwidth is `output_sigma_factor·√(w·h)/cell`.
    pub output_sigma_factor: f64,
    pub feature: FeatureConfig,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            mode: TrackerMode::LcKcf,
            lambda: 1e-4,
            sigma0: 1e-4,
            growth: 2.0,
            window: Some(16),
            padding: 1.5,
            kernel_sigma: 0.5,
            kernel_normalize: true,
            rho: 0.1,
            output_sigma_factor: 0.1,
            feature: FeatureConfig::gray(),
        }
    }
}

impl TrackerConfig {
    /// Plain KCF with the same shared parameters.
    pub fn kcf() -> Self {
        Self {
            mode: TrackerMode::Kcf,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("padding", self.padding),
            ("kernel_sigma", self.kernel_sigma),
            ("output_sigma_factor", self.output_sigma_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.sigma0 >= 0.0) || !self.sigma0.is_finite() {
            return Err(Error::invalid(format!("sigma0 must be >= 0, got {}", self.sigma0)));
        }
        if !(self.growth > 1.0) {
            return Err(Error::invalid(format!("growth must exceed 1, got {}", self.growth)));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::invalid(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        if self.window == Some(0) {
            return Err(Error::invalid("history window must be at least 1"));
        }
        self.feature.validate()
    }

    fn kernel(&self) -> GaussianKernel {
        GaussianKernel {
            sigma: self.kernel_sigma,
            normalize: self.kernel_normalize,
        }
    }

    fn features(&self) -> FeatureConfig {
        self.feature.clone().with_window(true)
    }

    /// Search window `(width, height)` in pixels for a target size, rounded
    /// down to whole cells and at least two cells per side.
    pub fn window_size(&self, target_w: f64, target_h: f64) -> (usize, usize) {
        let (cw, ch) = self.feature.cell_size();
        let fit = |len: f64, cell: usize| {
            let cells = ((len * (1.0 + self.padding)) / cell as f64).floor() as usize;
            cells.max(2) * cell
        };
        (fit(target_w, cw), fit(target_h, ch))
    }
}

/// Mutable per-sequence tracker state.
#[derive(Debug, Clone)]
pub struct TrackerState {
    pub bbox: BBox,
    pub template: FeatureMap,
    pub alpha: DualSpectrum,
    pub beta: DualSpectrum,
    pub alpha_history: Option<SubspaceHistory>,
    pub penalty: PenaltySchedule,
    pub frame_index: usize,
    label: Spectrum,
    window: (usize, usize),
}

impl TrackerState {
    pub fn label(&self) -> &Spectrum {
        &self.label
    }

    /// Search window size in pixels.
    pub fn window(&self) -> (usize, usize) {
        self.window
    }
}

/// Output of one tracking step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub bbox: BBox,
    pub score: f64,
    pub response: ImagePlane,
    /// `‖α̂ᵗ⁺¹ − α̂ᵗ‖` (zero in plain KCF mode).
    pub epsilon: f64,
    /// Penalty after the step.
    pub sigma: f64,
}

fn crop_features(frame: &ImagePlane, center: (f64, f64), window: (usize, usize), config: &TrackerConfig) -> Result<FeatureMap> {
    let top = (center.1 - window.1 as f64 / 2.0).floor() as isize;
    let left = (center.0 - window.0 as f64 / 2.0).floor() as isize;
    let mut patch = frame.crop_replicate(top, left, window.0, window.1);
    if config.feature.kind == crate::features::FeatureKind::Gray {
        patch.data_mut().iter_mut().for_each(|v| *v -= 0.5);
    }
    extract(&patch, &config.features())
}

/// Keeps the box inside the frame; fails when it cannot fit at all.
fn clamp_bbox(bbox: BBox, frame: &ImagePlane) -> Result<BBox> {
    let (fw, fh) = (frame.width() as f64, frame.height() as f64);
    if !bbox.is_valid() || bbox.w > fw || bbox.h > fh {
        return Err(Error::invalid(format!(
            "box {:?} degenerate or larger than the {}x{} frame",
            bbox,
            frame.width(),
            frame.height()
        )));
    }
    Ok(BBox {
        x: bbox.x.clamp(0.0, fw - bbox.w),
        y: bbox.y.clamp(0.0, fh - bbox.h),
        ..bbox
    })
}

fn training_label(target: &BBox, grid: (usize, usize), config: &TrackerConfig) -> Result<Spectrum> {
    let (cw, ch) = config.feature.cell_size();
    let cell = ((cw * ch) as f64).sqrt();
    let bandwidth = config.output_sigma_factor * (target.w * target.h).sqrt() / cell;
    let (gw, gh) = grid;
    let centered = gaussian_response(gw, gh, (gh / 2, gw / 2), bandwidth * bandwidth)?;
    fft2(&centered.plane.circshift(-((gh / 2) as isize), -((gw / 2) as isize)))
}

/// Initializes the tracker on the first frame with a plain KCF solution.
pub fn init_tracker(frame: &ImagePlane, bbox: BBox, config: &TrackerConfig) -> Result<TrackerState> {
    config.validate()?;
    let bbox = clamp_bbox(bbox, frame)?;
    let window = config.window_size(bbox.w, bbox.h);
    if window.0 > frame.width() || window.1 > frame.height() {
        return Err(Error::invalid(format!(
            "frame {}x{} smaller than the {}x{} search window",
            frame.width(),
            frame.height(),
            window.0,
            window.1
        )));
    }
    let template = crop_features(frame, bbox.center(), window, config)?;
    let label = training_label(&bbox, (template.width(), template.height()), config)?;
    let kxx = kernel_autocorrelation(&template, &config.kernel())?;
    let alpha = solve_kcf(&kxx, &label, config.lambda)?;
    let alpha_history = match (config.mode, config.window) {
        (TrackerMode::LcKcf, Some(t)) => {
            let mut h = SubspaceHistory::with_capacity(t)?;
            h.push(alpha.data().to_vec())?;
            Some(h)
        }
        _ => None,
    };
    Ok(TrackerState {
        bbox,
        template,
        beta: alpha.clone(),
        alpha,
        alpha_history,
        penalty: PenaltySchedule::new(config.sigma0, 1.0, config.growth)?,
        frame_index: 0,
        label,
        window,
    })
}

/// Detection response `ifft2(k̂ᶻˣ ⊙ α̂)` of the current model on features `z`.
pub fn response_map(state: &TrackerState, z: &FeatureMap, config: &TrackerConfig) -> Result<ImagePlane> {
    let kzx = kernel_crosscorrelation(z, &state.template, &config.kernel())?;
    let prod = kzx.zip_with(&state.alpha.0, |k, a| k * a)?;
    ifft2(&prod)
}

/// Locate the target in `frame`, then retrain the model at the new location.
pub fn track_step(state: &mut TrackerState, frame: &ImagePlane, config: &TrackerConfig) -> Result<StepOutput> {
    if state.window.0 > frame.width() || state.window.1 > frame.height() {
        return Err(Error::invalid("frame smaller than the search window"));
    }
    let (cw, ch) = config.feature.cell_size();
    let center = state.bbox.center();
    let z = crop_features(frame, center, state.window, config)?;
    let response = response_map(state, &z, config)?;
    let peak = detect_peak(&response);

    let (gw, gh) = (response.width(), response.height());
    let wrap = |idx: usize, len: usize| -> f64 {
        if idx > len / 2 {
            idx as f64 - len as f64
        } else {
            idx as f64
        }
    };
    let dy = wrap(peak.row, gh) * ch as f64;
    let dx = wrap(peak.col, gw) * cw as f64;
    let bbox = clamp_bbox(
        BBox::from_center(center.0 + dx, center.1 + dy, state.bbox.w, state.bbox.h),
        frame,
    )?;

    let x_new = crop_features(frame, bbox.center(), state.window, config)?;
    let kxx = kernel_autocorrelation(&x_new, &config.kernel())?;
    let alpha_kcf = solve_kcf(&kxx, &state.label, config.lambda)?;

    let mut epsilon = 0.0;
    let alpha_next = match config.mode {
        TrackerMode::Kcf => alpha_kcf,
        TrackerMode::LcKcf => {
            let sigma = state.penalty.sigma;
            let next = lc_kcf_alpha_update(&alpha_kcf, &state.beta, &kxx, config.lambda, sigma)?;
            epsilon = complex_distance(next.data(), state.alpha.data());
            state.penalty = state.penalty.update(epsilon, PenaltyMode::Strict)?.0;
            state.beta = match state.alpha_history.as_mut() {
                Some(history) => {
                    let beta = project_subspace(next.data(), history)?;
                    history.push(next.data().to_vec())?;
                    DualSpectrum(Spectrum::new(next.0.width(), next.0.height(), beta)?)
                }
                None => next.clone(),
            };
            next
        }
    };

    state.alpha = alpha_next;
    state.template = state.template.blend(&x_new, config.rho)?;
    state.bbox = bbox;
    state.frame_index += 1;

    Ok(StepOutput {
        bbox,
        score: peak.score,
        response,
        epsilon,
        sigma: state.penalty.sigma,
    })
}

/// Per-frame tracker output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRecord {
    pub bbox: BBox,
    pub score: f64,
    pub sigma: f64,
    pub epsilon: f64,
}

/// Runs the tracker over a whole sequence; frame 0 reports the initial box.
pub fn track_sequence(frames: &[ImagePlane], init: BBox, config: &TrackerConfig) -> Result<Vec<FrameRecord>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::invalid("sequence has no frames"))?;
    let mut state = init_tracker(first, init, config)?;
    let self_response = response_map(&state, &state.template.clone(), config)?;
    let mut records = vec![FrameRecord {
        bbox: state.bbox,
        score: detect_peak(&self_response).score,
        sigma: state.penalty.sigma,
        epsilon: 0.0,
    }];
    for frame in &frames[1..] {
        let out = track_step(&mut state, frame, config)?;
        records.push(FrameRecord {
            bbox: out.bbox,
            score: out.score,
            sigma: out.sigma,
            epsilon: out.epsilon,
        });
    }
    Ok(records)
}
