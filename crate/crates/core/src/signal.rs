//! Image planes, their 2-D spectra and the frequency-domain primitives every
//! solver builds on.
//!
//! The forward transform is unnormalized and the inverse carries the
//! `1/(W·H)` factor, so `ifft2(fft2(x) ⊙ conj(fft2(h)))` is the circular
//! cross-correlation of `x` with `h`.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Imaginary residue tolerated (relative to the largest real magnitude) when
/// collapsing an inverse transform back to a real plane.
pub const IMAG_RESIDUE_TOLERANCE: f64 = 1e-6;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// A real-valued row-major image or feature channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "plane dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::mismatch(width * height, data.len()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "plane dimensions must be positive");
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut plane = Self::zeros(width, height);
        for r in 0..height {
            for c in 0..width {
                plane.data[r * width + c] = f(r, c);
            }
        }
        plane
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn same_shape(&self, other: &ImagePlane) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Elementwise product with another plane of the same shape.
    pub fn hadamard(&self, other: &ImagePlane) -> Result<ImagePlane> {
        if !self.same_shape(other) {
            return Err(Error::mismatch(
                format!("{}x{}", self.width, self.height),
                format!("{}x{}", other.width, other.height),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .collect();
        Ok(ImagePlane {
            width: self.width,
            height: self.height,
            data,
        })
    }

    /// Cyclic shift so that the value at `(row, col)` moves to
    /// `(row + dr, col + dc)` modulo the plane size.
    pub fn circshift(&self, dr: isize, dc: isize) -> ImagePlane {
        let (w, h) = (self.width as isize, self.height as isize);
        let mut out = ImagePlane::zeros(self.width, self.height);
        for r in 0..h {
            for c in 0..w {
                let nr = (r + dr).rem_euclid(h) as usize;
                let nc = (c + dc).rem_euclid(w) as usize;
                out.data[nr * self.width + nc] = self.data[(r * w + c) as usize];
            }
        }
        out
    }

    /// Rectangular crop with replicated borders; `(top, left)` may lie outside the plane.
    pub fn crop_replicate(&self, top: isize, left: isize, width: usize, height: usize) -> ImagePlane {
        let max_r = self.height as isize - 1;
        let max_c = self.width as isize - 1;
        ImagePlane::from_fn(width, height, |r, c| {
            let sr = (top + r as isize).clamp(0, max_r) as usize;
            let sc = (left + c as isize).clamp(0, max_c) as usize;
            self.get(sr, sc)
        })
    }
}

/// Complex spectrum of an [`ImagePlane`], same row-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(width: usize, height: usize, data: Vec<Complex64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "spectrum dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::mismatch(width * height, data.len()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "spectrum dimensions must be positive");
        Self {
            width,
            height,
            data: vec![Complex64::new(0.0, 0.0); width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: Complex64) -> Self {
        let mut s = Self::zeros(width, height);
        s.data.fill(value);
        s
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.width + col]
    }

    pub fn same_shape(&self, other: &Spectrum) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn conj(&self) -> Spectrum {
        Spectrum {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Elementwise combination of two equally shaped spectra.
    pub fn zip_with(
        &self,
        other: &Spectrum,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Spectrum> {
        if !self.same_shape(other) {
            return Err(Error::mismatch(
                format!("{}x{}", self.width, self.height),
                format!("{}x{}", other.width, other.height),
            ));
        }
        Ok(Spectrum {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }
}

fn check_finite(values: impl Iterator<Item = bool>) -> Result<()> {
    for (i, ok) in values.enumerate() {
        if !ok {
            return Err(Error::NonFinite(i));
        }
    }
    Ok(())
}

/// In-place 2-D transform: rows of length `width`, then columns of length `height`.
fn transform_2d(data: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let (row_fft, col_fft) = if inverse {
            (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height))
        } else {
            (planner.plan_fft_forward(width), planner.plan_fft_forward(height))
        };
        row_fft.process(data);

        let mut column = vec![Complex64::new(0.0, 0.0); height];
        for c in 0..width {
            for r in 0..height {
                column[r] = data[r * width + c];
            }
            col_fft.process(&mut column);
            for r in 0..height {
                data[r * width + c] = column[r];
            }
        }
    });
}

/// Forward unnormalized 2-D DFT of a real plane.
pub fn fft2(plane: &ImagePlane) -> Result<Spectrum> {
    check_finite(plane.data.iter().map(|v| v.is_finite()))?;
    let mut data: Vec<Complex64> = plane.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_2d(&mut data, plane.width, plane.height, false);
    Ok(Spectrum {
        width: plane.width,
        height: plane.height,
        data,
    })
}

/// Inverse 2-D DFT with `1/(W·H)` normalization, keeping the complex result.
pub fn ifft2_complex(spec: &Spectrum) -> Result<Vec<Complex64>> {
    check_finite(spec.data.iter().map(|v| v.is_finite()))?;
    let mut data = spec.data.clone();
    transform_2d(&mut data, spec.width, spec.height, true);
    let scale = 1.0 / (spec.width * spec.height) as f64;
    data.iter_mut().for_each(|v| *v *= scale);
    Ok(data)
}

/// Inverse 2-D DFT of a (conjugate-symmetric) spectrum, returning the real part.
///
/// The imaginary residue is discarded; a residue above
/// [`IMAG_RESIDUE_TOLERANCE`] relative to the output scale is reported as a
/// corrupted spectrum.
pub fn ifft2(spec: &Spectrum) -> Result<ImagePlane> {
    let data = ifft2_complex(spec)?;
    let scale = data.iter().fold(1.0f64, |m, v| m.max(v.re.abs()));
    let residue = data.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
    if residue > IMAG_RESIDUE_TOLERANCE * scale {
        return Err(Error::CorruptedSpectrum(residue / scale));
    }
    Ok(ImagePlane {
        width: spec.width,
        height: spec.height,
        data: data.into_iter().map(|v| v.re).collect(),
    })
}

/// Gaussian-peaked regression target for filter training.
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredResponse {
    pub plane: ImagePlane,
    pub peak: (usize, usize),
    pub variance: f64,
}

/// `exp(-((r - pr)² + (c - pc)²) / (2·variance))` with its unit maximum at `peak = (row, col)`.
pub fn gaussian_response(
    width: usize,
    height: usize,
    peak: (usize, usize),
    variance: f64,
) -> Result<DesiredResponse> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("response plane must be non-empty"));
    }
    if peak.0 >= height || peak.1 >= width {
        return Err(Error::invalid(format!(
            "peak ({}, {}) outside {width}x{height} plane",
            peak.0, peak.1
        )));
    }
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::invalid(format!("variance must be positive, got {variance}")));
    }
    let (pr, pc) = (peak.0 as f64, peak.1 as f64);
    let plane = ImagePlane::from_fn(width, height, |r, c| {
        let dr = r as f64 - pr;
        let dc = c as f64 - pc;
        (-(dr * dr + dc * dc) / (2.0 * variance)).exp()
    });
    Ok(DesiredResponse {
        plane,
        peak,
        variance,
    })
}

/// Zero-mean, unit population standard deviation copy of `plane`.
pub fn normalize_image(plane: &ImagePlane) -> Result<ImagePlane> {
    if plane.len() < 2 {
        return Err(Error::DegenerateImage(
            "normalization needs at least two pixels".into(),
        ));
    }
    let n = plane.len() as f64;
    let mean = plane.data.iter().sum::<f64>() / n;
    let var = plane.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if !(std > 1e-12 * mean.abs().max(1.0)) {
        return Err(Error::DegenerateImage("zero variance".into()));
    }
    let data = plane.data.iter().map(|v| (v - mean) / std).collect();
    Ok(ImagePlane {
        width: plane.width,
        height: plane.height,
        data,
    })
}

fn hann(n: usize) -> Vec<f64> {
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / denom).cos()))
        .collect()
}

/// Separable Hann taper: zero on the border, one at the center of odd sizes.
pub fn cosine_window(width: usize, height: usize) -> Result<ImagePlane> {
    if width < 2 || height < 2 {
        return Err(Error::invalid(format!(
            "cosine window needs at least 2x2, got {width}x{height}"
        )));
    }
    let wx = hann(width);
    let wy = hann(height);
    Ok(ImagePlane::from_fn(width, height, |r, c| wy[r] * wx[c]))
}

/// Euclidean norm of the elementwise difference of two complex vectors.
pub fn complex_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
