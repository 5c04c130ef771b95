//! Python bindings for `lccf_core`.
//!
//! Images cross the boundary as lists of rows (`list[list[float]]`), boxes as
//! `(x, y, w, h)` tuples with a 0-based top-left corner.

use std::path::PathBuf;

use lccf_core::detection::{self, DetectorConfig};
use lccf_core::evaluation;
use lccf_core::features::extract;
use lccf_core::kernel_cf::track_sequence;
use lccf_core::sadmm;
use lccf_core::signal;
use lccf_core::{BBox, FeatureConfig, FilterSpectrum, ImagePlane, LcLcfConfig, SubspaceHistory, TrackerConfig, TrackerMode};
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

type Rows = Vec<Vec<f64>>;

fn py_err(e: lccf_core::Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn plane(rows: Rows) -> PyResult<ImagePlane> {
    let height = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(PyValueError::new_err("image rows must all have the same length"));
    }
    ImagePlane::new(width, height, rows.into_iter().flatten().collect()).map_err(py_err)
}

fn rows(p: &ImagePlane) -> Rows {
    p.data().chunks(p.width()).map(<[f64]>::to_vec).collect()
}

fn feature(name: &str) -> PyResult<FeatureConfig> {
    name.parse().map_err(py_err)
}

fn bbox(b: (f64, f64, f64, f64)) -> BBox {
    BBox::new(b.0, b.1, b.2, b.3)
}

/// Gaussian regression target with its unit peak at `(row, col)`.
#[pyfunction]
fn gaussian_response(width: usize, height: usize, row: usize, col: usize, variance: f64) -> PyResult<Rows> {
    Ok(rows(&signal::gaussian_response(width, height, (row, col), variance).map_err(py_err)?.plane))
}

#[pyfunction]
fn normalize_image(image: Rows) -> PyResult<Rows> {
    Ok(rows(&signal::normalize_image(&plane(image)?).map_err(py_err)?))
}

/// Feature channels for `image`; `feature` is a spec string such as `"gray"` or `"hog"`.
#[pyfunction]
#[pyo3(signature = (image, feature = "hog"))]
fn features(image: Rows, feature: &str) -> PyResult<Vec<Rows>> {
    let map = extract(&plane(image)?, &self::feature(feature)?).map_err(py_err)?;
    Ok(map.channels().iter().map(rows).collect())
}

/// Convex-combination projection of `current` onto stored iterates, as `(re, im)` pairs.
#[pyfunction]
fn project_subspace(current: Vec<(f64, f64)>, history: Vec<Vec<(f64, f64)>>) -> PyResult<Vec<(f64, f64)>> {
    let c = |v: Vec<(f64, f64)>| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect::<Vec<_>>();
    let mut hist = SubspaceHistory::new();
    for entry in history {
        hist.push(c(entry)).map_err(py_err)?;
    }
    let g = sadmm::project_subspace(&c(current), &hist).map_err(py_err)?;
    Ok(g.into_iter().map(|v| (v.re, v.im)).collect())
}

#[pyfunction]
fn localization_rate(distances: Vec<f64>, tau: f64) -> PyResult<f64> {
    evaluation::localization_rate(&distances, tau).map_err(py_err)
}

#[pyfunction]
fn interocular_distance(pred: (f64, f64), truth: (f64, f64), left_eye: (f64, f64), right_eye: (f64, f64)) -> PyResult<f64> {
    evaluation::interocular_distance(pred, truth, left_eye, right_eye).map_err(py_err)
}

/// Precision at `threshold` pixels of center error.
#[pyfunction]
#[pyo3(signature = (pred, truth, threshold = 20.0))]
fn precision(pred: Vec<(f64, f64, f64, f64)>, truth: Vec<(f64, f64, f64, f64)>, threshold: f64) -> PyResult<f64> {
    let p: Vec<BBox> = pred.into_iter().map(bbox).collect();
    let t: Vec<BBox> = truth.into_iter().map(bbox).collect();
    Ok(evaluation::precision_curve(&p, &t, &[threshold]).map_err(py_err)?.values[0])
}

/// Area under the success curve on IoU thresholds 0:0.05:1.
#[pyfunction]
fn success_auc(pred: Vec<(f64, f64, f64, f64)>, truth: Vec<(f64, f64, f64, f64)>) -> PyResult<f64> {
    let p: Vec<BBox> = pred.into_iter().map(bbox).collect();
    let t: Vec<BBox> = truth.into_iter().map(bbox).collect();
    Ok(evaluation::success_curve(&p, &t, &evaluation::auc_grid()).map_err(py_err)?.1)
}

#[pyfunction]
fn iou(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> f64 {
    bbox(a).iou(&bbox(b))
}

/// A trained detection filter.
#[pyclass(module = "lccf")]
struct Filter {
    inner: FilterSpectrum,
}

#[pymethods]
impl Filter {
    /// Trains on images annotated with a target `(row, col)`.
    /// `solver` is `"mccf"` or `"lc-lcf"`.
    #[staticmethod]
    #[pyo3(signature = (images, peaks, solver = "lc-lcf", feature = "gray", lam = 1e-4, response_variance = 2.0))]
    fn train(
        images: Vec<Rows>,
        peaks: Vec<(usize, usize)>,
        solver: &str,
        feature: &str,
        lam: f64,
        response_variance: f64,
    ) -> PyResult<Self> {
        if images.len() != peaks.len() {
            return Err(PyValueError::new_err(format!(
                "{} images but {} peaks",
                images.len(),
                peaks.len()
            )));
        }
        let planes = images.into_iter().map(plane).collect::<PyResult<Vec<_>>>()?;
        let config = DetectorConfig {
            feature: self::feature(feature)?,
            response_variance,
            lambda: lam,
        };
        let pairs = planes.iter().zip(peaks);
        let inner = match solver {
            "mccf" => detection::train_mccf(pairs, &config),
            "lc-lcf" => detection::train_lc_lcf(pairs, &config, &LcLcfConfig::default()).map(|s| s.filter),
            other => return Err(PyValueError::new_err(format!("solver must be mccf or lc-lcf, got {other:?}"))),
        }
        .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: FilterSpectrum::load(&path).map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(py_err)
    }

    /// `(row, col, score)` of the response peak, in pixels.
    fn detect(&self, image: Rows) -> PyResult<(f64, f64, f64)> {
        let d = detection::detect(&self.inner, &plane(image)?).map_err(py_err)?;
        Ok((d.row, d.col, d.score))
    }

    /// Raw response map on the feature grid.
    fn apply(&self, image: Rows) -> PyResult<Rows> {
        let features = detection::prepare(&plane(image)?, self.inner.feature()).map_err(py_err)?;
        Ok(rows(&lccf_core::linear_cf::apply_filter(&self.inner, &features).map_err(py_err)?))
    }

    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        (self.inner.num_channels(), self.inner.height(), self.inner.width())
    }
}

/// Runs KCF or LC-KCF over `frames` from `init`, returning
/// `(x, y, w, h, peak_score, sigma, epsilon)` per frame.
#[pyfunction]
#[pyo3(signature = (frames, init, tracker = "lc-kcf", feature = "gray"))]
fn track(
    frames: Vec<Rows>,
    init: (f64, f64, f64, f64),
    tracker: &str,
    feature: &str,
) -> PyResult<Vec<(f64, f64, f64, f64, f64, f64, f64)>> {
    let mut config = match tracker {
        "kcf" => TrackerConfig {
            mode: TrackerMode::Kcf,
            sigma0: 0.0,
            window: None,
            ..TrackerConfig::default()
        },
        "lc-kcf" => TrackerConfig::default(),
        other => return Err(PyValueError::new_err(format!("tracker must be kcf or lc-kcf, got {other:?}"))),
    };
    config.feature = self::feature(feature)?;
    let planes = frames.into_iter().map(plane).collect::<PyResult<Vec<_>>>()?;
    let records = track_sequence(&planes, bbox(init), &config).map_err(py_err)?;
    Ok(records
        .iter()
        .map(|r| (r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h, r.score, r.sigma, r.epsilon))
        .collect())
}

#[pymodule]
fn lccf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gaussian_response, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_image, m)?)?;
    m.add_function(wrap_pyfunction!(features, m)?)?;
    m.add_function(wrap_pyfunction!(project_subspace, m)?)?;
    m.add_function(wrap_pyfunction!(localization_rate, m)?)?;
    m.add_function(wrap_pyfunction!(interocular_distance, m)?)?;
    m.add_function(wrap_pyfunction!(precision, m)?)?;
    m.add_function(wrap_pyfunction!(success_auc, m)?)?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(track, m)?)?;
    m.add_class::<Filter>()?;
    Ok(())
}
