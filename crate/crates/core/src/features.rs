//! K-channel feature extraction: grayscale passthrough and a compact HOG.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::signal::{cosine_window, ImagePlane};

/// Block-normalization regularizer.
pub const HOG_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Gray,
    Hog,
}

/// Feature extraction settings. Cell and block sizes are `(width, height)` in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub kind: FeatureKind,
    pub orientations: usize,
    pub cell: (usize, usize),
    pub block: (usize, usize),
    /// Multiply every channel by a Hann taper over the feature grid.
    pub cosine_window: bool,
}

impl FeatureConfig {
    pub fn gray() -> Self {
        Self {
            kind: FeatureKind::Gray,
            orientations: 1,
            cell: (1, 1),
            block: (1, 1),
            cosine_window: false,
        }
    }

    /// Detection HOG: 5 unsigned orientations, 5×5 cells and blocks.
    pub fn hog() -> Self {
        Self {
            kind: FeatureKind::Hog,
            orientations: 5,
            cell: (5, 5),
            block: (5, 5),
            cosine_window: false,
        }
    }

    /// Tracking HOG with 4×4 cells.
    pub fn hog_tracking() -> Self {
        Self {
            cell: (4, 4),
            block: (4, 4),
            ..Self::hog()
        }
    }

    pub fn with_window(mut self, on: bool) -> Self {
        self.cosine_window = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.orientations == 0 {
            return Err(Error::invalid("orientations must be at least 1"));
        }
        if self.cell.0 == 0 || self.cell.1 == 0 || self.block.0 == 0 || self.block.1 == 0 {
            return Err(Error::invalid("cell and block dimensions must be at least 1"));
        }
        Ok(())
    }

    /// Number of channels produced by this configuration.
    pub fn channels(&self) -> usize {
        match self.kind {
            FeatureKind::Gray => 1,
            FeatureKind::Hog => self.orientations,
        }
    }

    /// Pixel size of one feature cell as `(width, height)`.
    pub fn cell_size(&self) -> (usize, usize) {
        match self.kind {
            FeatureKind::Gray => (1, 1),
            FeatureKind::Hog => self.cell,
        }
    }

    /// Feature grid `(width, height)` for an image of the given size.
    pub fn grid_size(&self, width: usize, height: usize) -> (usize, usize) {
        let (cw, ch) = self.cell_size();
        (width / cw, height / ch)
    }
}

impl fmt::Display for FeatureConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let window = u8::from(self.cosine_window);
        match self.kind {
            FeatureKind::Gray => write!(f, "gray;window={window}"),
            FeatureKind::Hog => write!(
                f,
                "hog;orientations={};cell={}x{};block={}x{};window={window}",
                self.orientations, self.cell.0, self.cell.1, self.block.0, self.block.1
            ),
        }
    }
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once('x')
        .ok_or_else(|| Error::invalid(format!("expected WxH, got {s:?}")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| Error::invalid(format!("bad dimension {v:?}")))
    };
    Ok((parse(a)?, parse(b)?))
}

impl FromStr for FeatureConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(';');
        let mut config = match parts.next().map(str::trim) {
            Some("gray") => FeatureConfig::gray(),
            Some("hog") => FeatureConfig::hog(),
            other => return Err(Error::invalid(format!("unknown feature kind {other:?}"))),
        };
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("malformed descriptor field {part:?}")))?;
            match key.trim() {
                "orientations" => {
                    config.orientations = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad orientations {value:?}")))?
                }
                "cell" => config.cell = parse_pair(value)?,
                "block" => config.block = parse_pair(value)?,
                "window" => config.cosine_window = value.trim() == "1",
                other => return Err(Error::invalid(format!("unknown descriptor key {other:?}"))),
            }
        }
        config.validate()?;
        Ok(config)
    }
}

/// Multi-channel feature tensor; every channel covers the same cell grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: Vec<ImagePlane>,
    cell_size: (usize, usize),
    config: FeatureConfig,
}

impl FeatureMap {
    pub fn new(channels: Vec<ImagePlane>, config: FeatureConfig) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::invalid("feature map needs at least one channel"))?;
        if let Some(bad) = channels.iter().find(|c| !c.same_shape(first)) {
            return Err(Error::mismatch(
                format!("{}x{}", first.width(), first.height()),
                format!("{}x{}", bad.width(), bad.height()),
            ));
        }
        Ok(Self {
            cell_size: config.cell_size(),
            channels,
            config,
        })
    }

    /// Single-channel map with a gray passthrough descriptor.
    pub fn from_plane(plane: ImagePlane) -> Self {
        Self {
            channels: vec![plane],
            cell_size: (1, 1),
            config: FeatureConfig::gray(),
        }
    }

    pub fn channels(&self) -> &[ImagePlane] {
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

    pub fn cell_size(&self) -> (usize, usize) {
        self.cell_size
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn squared_norm(&self) -> f64 {
        self.channels.iter().map(ImagePlane::squared_norm).sum()
    }

    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        self.num_channels() == other.num_channels()
            && self.width() == other.width()
            && self.height() == other.height()
    }

    /// `(1 - rate)·self + rate·other`, used for template adaptation.
    pub fn blend(&self, other: &FeatureMap, rate: f64) -> Result<FeatureMap> {
        if !self.same_shape(other) {
            return Err(Error::mismatch(
                format!("{}x{}x{}", self.num_channels(), self.width(), self.height()),
                format!("{}x{}x{}", other.num_channels(), other.width(), other.height()),
            ));
        }
        let channels = self
            .channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| {
                let data = a
                    .data()
                    .iter()
                    .zip(b.data())
                    .map(|(x, y)| (1.0 - rate) * x + rate * y)
                    .collect();
                ImagePlane::new(a.width(), a.height(), data)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureMap {
            channels,
            cell_size: self.cell_size,
            config: self.config.clone(),
        })
    }

    fn apply_window(mut self) -> Result<Self> {
        let window = cosine_window(self.width(), self.height())?;
        for ch in &mut self.channels {
            *ch = ch.hadamard(&window)?;
        }
        Ok(self)
    }
}

/// Extract features according to `config.kind`.
pub fn extract(image: &ImagePlane, config: &FeatureConfig) -> Result<FeatureMap> {
    match config.kind {
        FeatureKind::Gray => extract_gray(image, config),
        FeatureKind::Hog => extract_hog(image, config),
    }
}

/// One-channel passthrough, optionally tapered.
pub fn extract_gray(image: &ImagePlane, config: &FeatureConfig) -> Result<FeatureMap> {
    config.validate()?;
    let map = FeatureMap {
        channels: vec![image.clone()],
        cell_size: (1, 1),
        config: FeatureConfig {
            kind: FeatureKind::Gray,
            ..config.clone()
        },
    };
    if config.cosine_window {
        map.apply_window()
    } else {
        Ok(map)
    }
}

/// Unsigned orientation in `[0, π)`.
fn unsigned_angle(gx: f64, gy: f64) -> f64 {
    let mut a = gy.atan2(gx);
    if a < 0.0 {
        a += PI;
    }
    if a >= PI {
        a -= PI;
    }
    a
}

/// Gradient-magnitude-weighted orientation histograms over a cell grid.
///
/// Centered differences with replicated borders; orientation bins are centered
/// at `b·π/n` with linear interpolation between the two nearest bins (cyclic).
/// Each cell is divided by the L2 norm of its block, `sqrt(‖block‖² + ε²)`.
pub fn extract_hog(image: &ImagePlane, config: &FeatureConfig) -> Result<FeatureMap> {
    config.validate()?;
    let (cw, ch) = config.cell;
    let (w, h) = (image.width(), image.height());
    if w < cw || h < ch {
        return Err(Error::invalid(format!(
            "image {w}x{h} smaller than one {cw}x{ch} cell"
        )));
    }
    let nbins = config.orientations;
    let (gw, gh) = (w / cw, h / ch);
    let mut hist = vec![0.0f64; gw * gh * nbins];
    let bin_width = PI / nbins as f64;

    for r in 0..gh * ch {
        let up = r.saturating_sub(1);
        let down = (r + 1).min(h - 1);
        for c in 0..gw * cw {
            let left = c.saturating_sub(1);
            let right = (c + 1).min(w - 1);
            let gx = image.get(r, right) - image.get(r, left);
            let gy = image.get(down, c) - image.get(up, c);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let pos = unsigned_angle(gx, gy) / bin_width;
            let lower = pos.floor();
            let frac = pos - lower;
            let b0 = (lower as usize) % nbins;
            let b1 = (b0 + 1) % nbins;
            let cell = (r / ch) * gw + c / cw;
            hist[cell * nbins + b0] += mag * (1.0 - frac);
            hist[cell * nbins + b1] += mag * frac;
        }
    }

    let bw = (config.block.0 / cw).max(1);
    let bh = (config.block.1 / ch).max(1);
    let mut block_energy = vec![0.0f64; gw.div_ceil(bw) * gh.div_ceil(bh)];
    let blocks_per_row = gw.div_ceil(bw);
    for gr in 0..gh {
        for gc in 0..gw {
            let cell = gr * gw + gc;
            let e: f64 = hist[cell * nbins..(cell + 1) * nbins].iter().map(|v| v * v).sum();
            block_energy[(gr / bh) * blocks_per_row + gc / bw] += e;
        }
    }

    let mut channels = vec![ImagePlane::zeros(gw, gh); nbins];
    for gr in 0..gh {
        for gc in 0..gw {
            let cell = gr * gw + gc;
            let norm = (block_energy[(gr / bh) * blocks_per_row + gc / bw]
                + HOG_EPSILON * HOG_EPSILON)
                .sqrt();
            for (b, plane) in channels.iter_mut().enumerate() {
                plane.set(gr, gc, hist[cell * nbins + b] / norm);
            }
        }
    }

    let map = FeatureMap {
        channels,
        cell_size: (cw, ch),
        config: config.clone(),
    };
    if config.cosine_window {
        map.apply_window()
    } else {
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::normalize_image;

    #[test]
    fn gray_passthrough() {
        let img = ImagePlane::from_fn(64, 64, |r, c| ((r * 7 + c * 3) % 11) as f64);
        let img = normalize_image(&img).unwrap();
        let map = extract_gray(&img, &FeatureConfig::gray()).unwrap();
        assert_eq!(map.num_channels(), 1);
        assert_eq!(map.channels()[0], img);
        assert!(map.channels()[0].mean().abs() < 1e-12);
    }

    #[test]
    fn gray_window_is_elementwise_product() {
        let img = ImagePlane::from_fn(9, 6, |r, c| (r as f64 - c as f64).sin());
        let map = extract_gray(&img, &FeatureConfig::gray().with_window(true)).unwrap();
        let win = cosine_window(9, 6).unwrap();
        for r in 0..6 {
            for c in 0..9 {
                assert!((map.channels()[0].get(r, c) - img.get(r, c) * win.get(r, c)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_image_has_zero_hog() {
        let img = ImagePlane::from_fn(20, 15, |_, _| 0.4);
        let map = extract_hog(&img, &FeatureConfig::hog()).unwrap();
        assert_eq!(map.num_channels(), 5);
        assert_eq!((map.width(), map.height()), (4, 3));
        assert!(map.channels().iter().all(|p| p.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn vertical_edge_fills_horizontal_bin() {
        let img = ImagePlane::from_fn(10, 10, |_, c| if c >= 5 { 1.0 } else { 0.0 });
        let map = extract_hog(&img, &FeatureConfig::hog()).unwrap();
        let total: f64 = map.channels().iter().map(|p| p.data().iter().sum::<f64>()).sum();
        let bin0: f64 = map.channels()[0].data().iter().sum();
        assert!(total > 0.0);
        assert!((bin0 - total).abs() < 1e-12);
    }

    #[test]
    fn too_small_image_rejected() {
        let img = ImagePlane::zeros(4, 10);
        assert!(extract_hog(&img, &FeatureConfig::hog()).is_err());
    }

    #[test]
    fn descriptor_roundtrip() {
        for cfg in [
            FeatureConfig::gray(),
            FeatureConfig::hog(),
            FeatureConfig::hog_tracking().with_window(true),
        ] {
            let parsed: FeatureConfig = cfg.to_string().parse().unwrap();
            assert_eq!(parsed, cfg);
        }
        assert!("sift".parse::<FeatureConfig>().is_err());
        assert!("hog;orientations=0".parse::<FeatureConfig>().is_err());
    }
}
