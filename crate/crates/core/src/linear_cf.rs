//! Multi-channel correlation filters (MCCF) and their latent-constrained
//! variant (LC-LCF) trained by subspace ADMM.
//!
//! A filter is stored as the spectra `ĥ_k` of its spatial channels. Its
//! response to features `x` is the circular cross-correlation
//! `Σ_k ifft2(x̂_k ⊙ conj(ĥ_k))`, so training solves, independently for each
//! frequency bin `d`, the `K×K` Hermitian system
//!
//! ```text
//! (λI + Σᵢ x̂ᵢ(d) x̂ᵢ(d)ᴴ) ĥ(d) = Σᵢ x̂ᵢ(d) conj(ŷᵢ(d))
//! ```

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureMap};
use crate::linalg;
use crate::sadmm::{project_subspace, PenaltyMode, PenaltySchedule, SubspaceHistory};
use crate::signal::{fft2, ifft2, ImagePlane, Spectrum};

pub const MODEL_MAGIC: &[u8; 4] = b"LCCF";
pub const MODEL_VERSION: u16 = 1;

/// Frequency-domain multi-channel filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpectrum {
    channels: Vec<Spectrum>,
    feature: FeatureConfig,
}

impl FilterSpectrum {
    pub fn new(channels: Vec<Spectrum>, feature: FeatureConfig) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::invalid("filter needs at least one channel"))?;
        if channels.iter().any(|c| !c.same_shape(first)) {
            return Err(Error::invalid("filter channels differ in size"));
        }
        Ok(Self { channels, feature })
    }

    /// Rebuild from a channel-major flattened vector of `K·W·H` bins.
    pub fn from_flat(
        flat: &[Complex64],
        channels: usize,
        width: usize,
        height: usize,
        feature: FeatureConfig,
    ) -> Result<Self> {
        let bins = width * height;
        if flat.len() != channels * bins {
            return Err(Error::mismatch(channels * bins, flat.len()));
        }
        let channels = flat
            .chunks(bins)
            .map(|chunk| Spectrum::new(width, height, chunk.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(channels, feature)
    }

    pub fn channels(&self) -> &[Spectrum] {
        &self.channels
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn width(&self) -> usize {
        self.channels[0].width()
    }

    pub fn height(&self) -> usize {
        self.channels[0].height()
    }

    pub fn feature(&self) -> &FeatureConfig {
        &self.feature
    }

    /// Channel-major flattened bins.
    pub fn to_flat(&self) -> Vec<Complex64> {
        self.channels
            .iter()
            .flat_map(|c| c.data().iter().copied())
            .collect()
    }

    pub fn squared_norm(&self) -> f64 {
        self.channels.iter().map(Spectrum::squared_norm).sum()
    }

    /// Binary model encoding: magic, version, `K`, `W`, `H`, descriptor, bins.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let descriptor = self.feature.to_string();
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&MODEL_VERSION.to_le_bytes())?;
        for dim in [self.num_channels(), self.width(), self.height()] {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        w.write_all(&(descriptor.len() as u32).to_le_bytes())?;
        w.write_all(descriptor.as_bytes())?;
        for ch in &self.channels {
            for v in ch.data() {
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let mut u16buf = [0u8; 2];
        r.read_exact(&mut u16buf)?;
        let version = u16::from_le_bytes(u16buf);
        if version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let read_u32 = |r: &mut dyn Read| -> Result<usize> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b) as usize)
        };
        let k = read_u32(&mut r)?;
        let width = read_u32(&mut r)?;
        let height = read_u32(&mut r)?;
        let desc_len = read_u32(&mut r)?;
        if k == 0 || width == 0 || height == 0 {
            return Err(Error::Format("zero dimension in header".into()));
        }
        let mut desc = vec![0u8; desc_len];
        r.read_exact(&mut desc)?;
        let desc = String::from_utf8(desc).map_err(|_| Error::Format("descriptor is not UTF-8".into()))?;
        let feature: FeatureConfig = desc.parse()?;
        let mut flat = Vec::with_capacity(k * width * height);
        let mut buf = [0u8; 16];
        for _ in 0..k * width * height {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            flat.push(Complex64::new(re, im));
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes", rest.len())));
        }
        Self::from_flat(&flat, k, width, height, feature)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::new();
        self.write_to(&mut bytes)?;
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_from(bytes.as_slice())
    }
}

/// One training pair in the frequency domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub features: Vec<Spectrum>,
    pub response: Spectrum,
}

impl TrainingSample {
    pub fn new(features: &FeatureMap, response: &ImagePlane) -> Result<Self> {
        if features.width() != response.width() || features.height() != response.height() {
            return Err(Error::mismatch(
                format!("{}x{}", features.width(), features.height()),
                format!("{}x{}", response.width(), response.height()),
            ));
        }
        Ok(Self {
            features: features.channels().iter().map(fft2).collect::<Result<_>>()?,
            response: fft2(response)?,
        })
    }
}

/// Samples sharing one channel count and grid, plus the ridge weight `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    samples: Vec<TrainingSample>,
    lambda: f64,
    feature: FeatureConfig,
}

impl TrainingSet {
    pub fn new(lambda: f64, feature: FeatureConfig) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(Self {
            samples: Vec::new(),
            lambda,
            feature,
        })
    }

    pub fn push(&mut self, sample: TrainingSample) -> Result<()> {
        if sample.features.is_empty() {
            return Err(Error::invalid("sample without channels"));
        }
        if sample
            .features
            .iter()
            .any(|f| !f.same_shape(&sample.response))
        {
            return Err(Error::invalid("sample channels and response differ in size"));
        }
        if let Some(first) = self.samples.first() {
            if first.features.len() != sample.features.len()
                || !first.response.same_shape(&sample.response)
            {
                return Err(Error::mismatch(
                    format!(
                        "K={} {}x{}",
                        first.features.len(),
                        first.response.width(),
                        first.response.height()
                    ),
                    format!(
                        "K={} {}x{}",
                        sample.features.len(),
                        sample.response.width(),
                        sample.response.height()
                    ),
                ));
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[TrainingSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn feature(&self) -> &FeatureConfig {
        &self.feature
    }

    /// `(K, W, H)` of the samples.
    pub fn dims(&self) -> Option<(usize, usize, usize)> {
        self.samples.first().map(|s| {
            (
                s.features.len(),
                s.response.width(),
                s.response.height(),
            )
        })
    }
}

/// Per-bin Gram matrices `Σ x̂x̂ᴴ` and right-hand sides `Σ x̂·conj(ŷ)`.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    channels: usize,
    bins: usize,
    gram: Vec<Complex64>,
    rhs: Vec<Complex64>,
    count: usize,
}

impl NormalEquations {
    pub fn new(channels: usize, bins: usize) -> Self {
        Self {
            channels,
            bins,
            gram: vec![Complex64::new(0.0, 0.0); bins * channels * channels],
            rhs: vec![Complex64::new(0.0, 0.0); bins * channels],
            count: 0,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn add(&mut self, sample: &TrainingSample) {
        let k = self.channels;
        for d in 0..self.bins {
            let y = sample.response.data()[d].conj();
            let gram = &mut self.gram[d * k * k..(d + 1) * k * k];
            for i in 0..k {
                let xi = sample.features[i].data()[d];
                self.rhs[d * k + i] += xi * y;
                for j in 0..k {
                    gram[i * k + j] += xi * sample.features[j].data()[d].conj();
                }
            }
        }
        self.count += 1;
    }

    /// Solves `(G + (λ + σ)I) ĥ = r + σ·prior` bin by bin; output is channel-major.
    pub fn solve(&self, lambda: f64, sigma: f64, prior: Option<&[Complex64]>) -> Result<Vec<Complex64>> {
        let k = self.channels;
        let d_total = self.bins;
        if let Some(p) = prior {
            if p.len() != k * d_total {
                return Err(Error::mismatch(k * d_total, p.len()));
            }
        }
        let shift = lambda + sigma;
        let mut out = vec![Complex64::new(0.0, 0.0); k * d_total];
        let mut a = vec![Complex64::new(0.0, 0.0); k * k];
        let mut b = vec![Complex64::new(0.0, 0.0); k];
        for d in 0..d_total {
            a.copy_from_slice(&self.gram[d * k * k..(d + 1) * k * k]);
            for i in 0..k {
                a[i * k + i] += shift;
                b[i] = self.rhs[d * k + i];
                if let Some(p) = prior {
                    b[i] += p[i * d_total + d] * sigma;
                }
            }
            linalg::solve_in_place(&mut a, &mut b, k).map_err(|col| Error::SingularBin {
                bin: d,
                row: col,
                col,
            })?;
            for i in 0..k {
                out[i * d_total + d] = b[i];
            }
        }
        Ok(out)
    }
}

fn accumulate(set: &TrainingSet, range: std::ops::Range<usize>) -> Result<NormalEquations> {
    let (k, w, h) = set
        .dims()
        .ok_or_else(|| Error::invalid("training set is empty"))?;
    let mut eq = NormalEquations::new(k, w * h);
    for s in &set.samples[range] {
        eq.add(s);
    }
    Ok(eq)
}

/// Closed-form multi-channel ridge solution over all samples.
pub fn solve_mccf(set: &TrainingSet) -> Result<FilterSpectrum> {
    let (k, w, h) = set
        .dims()
        .ok_or_else(|| Error::invalid("training set is empty"))?;
    let eq = accumulate(set, 0..set.len())?;
    let flat = eq.solve(set.lambda, 0.0, None)?;
    FilterSpectrum::from_flat(&flat, k, w, h, set.feature.clone())
}

/// Frequency-domain objective `½Σ‖ŷᵢ − X̂ᵢĥ‖² + λ/2‖ĥ‖²` over every sample of `set`.
pub fn objective(set: &TrainingSet, filter: &FilterSpectrum) -> Result<f64> {
    let (k, w, h) = set
        .dims()
        .ok_or_else(|| Error::invalid("training set is empty"))?;
    if k != filter.num_channels() || w != filter.width() || h != filter.height() {
        return Err(Error::mismatch(
            format!("K={k} {w}x{h}"),
            format!("K={} {}x{}", filter.num_channels(), filter.width(), filter.height()),
        ));
    }
    let mut data_term = 0.0;
    for s in &set.samples {
        for d in 0..w * h {
            let mut pred = Complex64::new(0.0, 0.0);
            for (x, f) in s.features.iter().zip(&filter.channels) {
                pred += x.data()[d] * f.data()[d].conj();
            }
            data_term += (s.response.data()[d] - pred).norm_sqr();
        }
    }
    Ok(0.5 * data_term + 0.5 * set.lambda * filter.squared_norm())
}

/// Schedule for the latent-constrained solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcLcfConfig {
    pub maxiter: usize,
    pub sigma0: f64,
    pub eta: f64,
    /// Fraction of the samples used for the initial MCCF solution.
    pub initial_fraction: f64,
}

impl Default for LcLcfConfig {
    fn default() -> Self {
        Self {
            maxiter: 12,
            sigma0: 0.25,
            eta: 0.7,
            initial_fraction: 0.5,
        }
    }
}

impl LcLcfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.maxiter == 0 {
            return Err(Error::invalid("maxiter must be at least 1"));
        }
        if !(self.sigma0 > 0.0) || !self.sigma0.is_finite() {
            return Err(Error::invalid(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.initial_fraction > 0.0 && self.initial_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "initial_fraction must lie in (0, 1], got {}",
                self.initial_fraction
            )));
        }
        Ok(())
    }

    /// Size of the initial subset for `n` samples.
    pub fn initial_size(&self, n: usize) -> usize {
        (self.initial_fraction * n as f64).floor() as usize
    }

    /// Subset size used by iteration `t` (1-based): the samples left out of
    /// the initial subset are added evenly so iteration `maxiter` sees all `n`.
    pub fn subset_size(&self, n: usize, t: usize) -> usize {
        let b = self.initial_size(n);
        b + (t * (n - b)) / self.maxiter
    }
}

/// Per-iteration record of the LC-LCF solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub epsilon: f64,
    /// Penalty used by this iteration's solve.
    pub sigma: f64,
    pub subset_size: usize,
}

/// Result of [`solve_lc_lcf`]: the final filter, the trace and every iterate.
#[derive(Debug, Clone)]
pub struct LcLcfSolution {
    pub filter: FilterSpectrum,
    pub trace: Vec<TraceEntry>,
    /// `ĥ⁰ … ĥ^maxiter`, channel-major flattened.
    pub iterates: Vec<Vec<Complex64>>,
    /// `ĝ⁰ … ĝ^maxiter`.
    pub projections: Vec<Vec<Complex64>>,
}

/// Latent-constrained solver with optional extra subspace anchors.
#[derive(Debug, Clone, Default)]
pub struct LcLcfSolver {
    config: LcLcfConfig,
    anchors: Vec<Vec<Complex64>>,
}

impl LcLcfSolver {
    pub fn new(config: LcLcfConfig) -> Self {
        Self {
            config,
            anchors: Vec::new(),
        }
    }

    /// Adds a fixed solution to the subspace history, after `ĥ⁰`.
    pub fn with_anchor(mut self, anchor: Vec<Complex64>) -> Self {
        self.anchors.push(anchor);
        self
    }

    pub fn solve(&self, set: &TrainingSet) -> Result<LcLcfSolution> {
        let cfg = self.config;
        cfg.validate()?;
        let (k, w, h) = set
            .dims()
            .ok_or_else(|| Error::invalid("training set is empty"))?;
        let n = set.len();
        let b = cfg.initial_size(n);
        if b < 1 {
            return Err(Error::invalid(format!(
                "initial_fraction {} of {n} samples leaves an empty initial subset",
                cfg.initial_fraction
            )));
        }

        let mut eq = accumulate(set, 0..b)?;
        let h0 = eq.solve(set.lambda, 0.0, None)?;
        let mut history = SubspaceHistory::new();
        history.push(h0.clone())?;
        for a in &self.anchors {
            history.push(a.clone())?;
        }

        let mut schedule = PenaltySchedule::new(cfg.sigma0, cfg.eta, 2.0)?;
        let mut h_cur = h0.clone();
        let mut g_cur = h0.clone();
        let mut iterates = vec![h0.clone()];
        let mut projections = vec![h0];
        let mut trace = Vec::with_capacity(cfg.maxiter);
        let mut used = b;

        for t in 1..=cfg.maxiter {
            let size = cfg.subset_size(n, t);
            for s in &set.samples[used..size] {
                eq.add(s);
            }
            used = size;

            let sigma = schedule.sigma;
            let h_next = eq.solve(set.lambda, sigma, Some(&g_cur))?;
            let eps = crate::signal::complex_distance(&h_next, &h_cur);
            schedule = schedule.update(eps, PenaltyMode::Scaled)?.0;
            let g_next = project_subspace(&h_next, &history)?;
            history.push(h_next.clone())?;

            trace.push(TraceEntry {
                iteration: t,
                epsilon: eps,
                sigma,
                subset_size: size,
            });
            iterates.push(h_next.clone());
            projections.push(g_next.clone());
            h_cur = h_next;
            g_cur = g_next;
        }

        let filter = FilterSpectrum::from_flat(&h_cur, k, w, h, set.feature.clone())?;
        Ok(LcLcfSolution {
            filter,
            trace,
            iterates,
            projections,
        })
    }
}

/// LC-LCF training: MCCF on an initial subset, then penalized solves against
/// the projection onto past iterates while the subset grows to the full set.
pub fn solve_lc_lcf(set: &TrainingSet, config: &LcLcfConfig) -> Result<LcLcfSolution> {
    LcLcfSolver::new(*config).solve(set)
}

/// Correlation response `Σ_k ifft2(x̂_k ⊙ conj(ĥ_k))`.
pub fn apply_filter(filter: &FilterSpectrum, features: &FeatureMap) -> Result<ImagePlane> {
    if features.num_channels() != filter.num_channels()
        || features.width() != filter.width()
        || features.height() != filter.height()
    {
        return Err(Error::mismatch(
            format!("K={} {}x{}", filter.num_channels(), filter.width(), filter.height()),
            format!("K={} {}x{}", features.num_channels(), features.width(), features.height()),
        ));
    }
    let mut acc = Spectrum::zeros(filter.width(), filter.height());
    for (x, hk) in features.channels().iter().zip(filter.channels()) {
        let xs = fft2(x)?;
        for ((a, xv), hv) in acc.data_mut().iter_mut().zip(xs.data()).zip(hk.data()) {
            *a += xv * hv.conj();
        }
    }
    ifft2(&acc)
}

/// Location and value of a response maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub row: usize,
    pub col: usize,
    pub score: f64,
}

/// Global maximum; ties go to the smallest row, then the smallest column.
pub fn detect_peak(response: &ImagePlane) -> Peak {
    let mut best = Peak {
        row: 0,
        col: 0,
        score: response.get(0, 0),
    };
    for r in 0..response.height() {
        for c in 0..response.width() {
            let v = response.get(r, c);
            if v > best.score {
                best = Peak { row: r, col: c, score: v };
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::gaussian_response;

    fn one_channel_set(lambda: f64) -> TrainingSet {
        let x = ImagePlane::from_fn(8, 8, |r, c| ((r * 3 + c * 5) % 7) as f64 - 3.0);
        let y = gaussian_response(8, 8, (3, 4), 2.0).unwrap().plane;
        let mut set = TrainingSet::new(lambda, FeatureConfig::gray()).unwrap();
        set.push(TrainingSample::new(&FeatureMap::from_plane(x), &y).unwrap()).unwrap();
        set
    }

    #[test]
    fn identity_data_returns_conjugate_target() {
        // x = impulse at the origin so x̂ ≡ 1; with λ = 0 the filter reproduces y.
        let mut x = ImagePlane::zeros(4, 4);
        x.set(0, 0, 1.0);
        let y = gaussian_response(4, 4, (1, 2), 1.0).unwrap().plane;
        let mut set = TrainingSet::new(0.0, FeatureConfig::gray()).unwrap();
        set.push(TrainingSample::new(&FeatureMap::from_plane(x.clone()), &y).unwrap()).unwrap();
        let f = solve_mccf(&set).unwrap();
        let yhat = fft2(&y).unwrap();
        for (a, b) in f.channels()[0].data().iter().zip(yhat.data()) {
            assert!((a - b.conj()).norm() < 1e-12);
        }
        let resp = apply_filter(&f, &FeatureMap::from_plane(x)).unwrap();
        for (a, b) in resp.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_lambda_shrinks_filter() {
        let base = solve_mccf(&one_channel_set(0.0)).unwrap().squared_norm().sqrt();
        let shrunk = solve_mccf(&one_channel_set(1e12)).unwrap().squared_norm().sqrt();
        assert!(shrunk < 1e-6 * base);
    }

    #[test]
    fn singular_bin_is_named() {
        let x = ImagePlane::from_fn(4, 4, |_, _| 1.0);
        let y = gaussian_response(4, 4, (0, 0), 1.0).unwrap().plane;
        let mut set = TrainingSet::new(0.0, FeatureConfig::gray()).unwrap();
        set.push(TrainingSample::new(&FeatureMap::from_plane(x), &y).unwrap()).unwrap();
        match solve_mccf(&set) {
            Err(Error::SingularBin { bin, .. }) => assert_eq!(bin, 1),
            other => panic!("expected singular bin, got {other:?}"),
        }
    }

    #[test]
    fn training_consistency_peak() {
        let set = one_channel_set(1e-4);
        let f = solve_mccf(&set).unwrap();
        let x = ImagePlane::from_fn(8, 8, |r, c| ((r * 3 + c * 5) % 7) as f64 - 3.0);
        let p = detect_peak(&apply_filter(&f, &FeatureMap::from_plane(x)).unwrap());
        assert_eq!((p.row, p.col), (3, 4));
    }

    #[test]
    fn zero_filter_zero_response() {
        let f = FilterSpectrum::new(vec![Spectrum::zeros(5, 5)], FeatureConfig::gray()).unwrap();
        let x = ImagePlane::from_fn(5, 5, |r, c| (r + c) as f64);
        let resp = apply_filter(&f, &FeatureMap::from_plane(x)).unwrap();
        assert!(resp.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn peak_tie_breaks() {
        let g = gaussian_response(9, 9, (2, 6), 1.5).unwrap();
        let p = detect_peak(&g.plane);
        assert_eq!((p.row, p.col, p.score), (2, 6, 1.0));
        let flat = ImagePlane::from_fn(4, 3, |_, _| 0.5);
        let p = detect_peak(&flat);
        assert_eq!((p.row, p.col), (0, 0));
        let mut two = ImagePlane::zeros(4, 4);
        two.set(1, 3, 2.0);
        two.set(2, 0, 2.0);
        let p = detect_peak(&two);
        assert_eq!((p.row, p.col), (1, 3));
    }

    #[test]
    fn subset_schedule_reaches_full_set() {
        let cfg = LcLcfConfig::default();
        assert_eq!(cfg.initial_size(40), 20);
        let sizes: Vec<usize> = (1..=12).map(|t| cfg.subset_size(40, t)).collect();
        assert_eq!(sizes.last(), Some(&40));
        assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(cfg.subset_size(24, 1), 13);
    }

    #[test]
    fn config_validation() {
        let mut cfg = LcLcfConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.maxiter = 0;
        assert!(cfg.validate().is_err());
        let cfg = LcLcfConfig {
            sigma0: 0.0,
            ..LcLcfConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = LcLcfConfig {
            initial_fraction: 0.01,
            ..LcLcfConfig::default()
        };
        assert!(solve_lc_lcf(&one_channel_set(0.1), &cfg).is_err());
    }

    #[test]
    fn model_roundtrip_and_header() {
        let f = solve_mccf(&one_channel_set(0.1)).unwrap();
        let mut bytes = Vec::new();
        f.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"LCCF");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[10..14].try_into().unwrap()), 8);
        assert_eq!(u32::from_le_bytes(bytes[14..18].try_into().unwrap()), 8);
        let desc_len = u32::from_le_bytes(bytes[18..22].try_into().unwrap()) as usize;
        assert_eq!(&bytes[22..22 + desc_len], b"gray;window=0");
        assert_eq!(bytes.len(), 22 + desc_len + 64 * 16);
        let back = FilterSpectrum::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, f);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(FilterSpectrum::read_from(bad.as_slice()).is_err());
        bytes.push(0);
        assert!(FilterSpectrum::read_from(bytes.as_slice()).is_err());
    }
}
