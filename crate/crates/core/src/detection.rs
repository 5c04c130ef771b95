//! Detection pipeline: normalized image → features → filter response → peak.

use crate::error::{Error, Result};
use crate::features::{extract, FeatureConfig, FeatureMap};
use crate::linear_cf::{
    apply_filter, detect_peak, solve_lc_lcf, solve_mccf, FilterSpectrum, LcLcfConfig, LcLcfSolution,
    TrainingSample, TrainingSet,
};
use crate::signal::{gaussian_response, normalize_image, ImagePlane};

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub feature: FeatureConfig,
    /// Desired-response variance, in feature-grid cells².
    pub response_variance: f64,
    pub lambda: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            feature: FeatureConfig::gray(),
            response_variance: 2.0,
            lambda: 1e-4,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        self.feature.validate()?;
        if !(self.response_variance > 0.0) || !self.response_variance.is_finite() {
            return Err(Error::invalid(format!(
                "response variance must be positive, got {}",
                self.response_variance
            )));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Zero-mean/unit-std normalization followed by feature extraction.
pub fn prepare(image: &ImagePlane, feature: &FeatureConfig) -> Result<FeatureMap> {
    extract(&normalize_image(image)?, feature)
}

/// Grid cell containing a pixel position.
pub fn pixel_to_grid(peak: (usize, usize), feature: &FeatureConfig) -> (usize, usize) {
    let (cw, ch) = feature.cell_size();
    (peak.0 / ch, peak.1 / cw)
}

/// Pixel position of a grid cell's center.
pub fn grid_to_pixel(cell: (usize, usize), feature: &FeatureConfig) -> (f64, f64) {
    let (cw, ch) = feature.cell_size();
    (
        (cell.0 * ch) as f64 + (ch as f64 - 1.0) / 2.0,
        (cell.1 * cw) as f64 + (cw as f64 - 1.0) / 2.0,
    )
}

/// Training pair for an image annotated with a target pixel position.
pub fn training_sample(image: &ImagePlane, peak: (usize, usize), config: &DetectorConfig) -> Result<TrainingSample> {
    let features = prepare(image, &config.feature)?;
    let (gr, gc) = pixel_to_grid(peak, &config.feature);
    if gr >= features.height() || gc >= features.width() {
        return Err(Error::invalid(format!(
            "peak {peak:?} falls outside the {}x{} feature grid",
            features.width(),
            features.height()
        )));
    }
    let response = gaussian_response(
        features.width(),
        features.height(),
        (gr, gc),
        config.response_variance,
    )?;
    TrainingSample::new(&features, &response.plane)
}

pub fn training_set<'a>(
    samples: impl IntoIterator<Item = (&'a ImagePlane, (usize, usize))>,
    config: &DetectorConfig,
) -> Result<TrainingSet> {
    config.validate()?;
    let mut set = TrainingSet::new(config.lambda, config.feature.clone())?;
    for (image, peak) in samples {
        set.push(training_sample(image, peak, config)?)?;
    }
    Ok(set)
}

pub fn train_mccf<'a>(
    samples: impl IntoIterator<Item = (&'a ImagePlane, (usize, usize))>,
    config: &DetectorConfig,
) -> Result<FilterSpectrum> {
    solve_mccf(&training_set(samples, config)?)
}

pub fn train_lc_lcf<'a>(
    samples: impl IntoIterator<Item = (&'a ImagePlane, (usize, usize))>,
    config: &DetectorConfig,
    solver: &LcLcfConfig,
) -> Result<LcLcfSolution> {
    solve_lc_lcf(&training_set(samples, config)?, solver)
}

/// Predicted target position in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub row: f64,
    pub col: f64,
    pub score: f64,
}

pub fn detect(filter: &FilterSpectrum, image: &ImagePlane) -> Result<Detection> {
    let features = prepare(image, filter.feature())?;
    let response = apply_filter(filter, &features)?;
    let peak = detect_peak(&response);
    let (row, col) = grid_to_pixel((peak.row, peak.col), filter.feature());
    Ok(Detection {
        row,
        col,
        score: peak.score,
    })
}
