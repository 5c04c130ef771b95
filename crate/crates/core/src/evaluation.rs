//! Localization and tracking metrics, and the curve CSV format.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::BBox;

/// Overlap thresholds used for the success AUC: `0, 0.05, …, 1`.
pub fn auc_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.05).collect()
}

/// `start:step:end` inclusive grid, tolerant to floating-point drift at the end.
pub fn threshold_grid(start: f64, step: f64, end: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !end.is_finite() || end < start {
        return Err(Error::invalid(format!("bad grid {start}:{step}:{end}")));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Parses `start:step:end`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::invalid(format!("grid {spec:?} is not start:step:end")))?;
    match parts.as_slice() {
        [start, step, end] => threshold_grid(*start, *step, *end),
        _ => Err(Error::invalid(format!("grid {spec:?} is not start:step:end"))),
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Localization error as a fraction of the eye-to-eye distance.
pub fn interocular_distance(
    pred: (f64, f64),
    truth: (f64, f64),
    left_eye: (f64, f64),
    right_eye: (f64, f64),
) -> Result<f64> {
    let norm = dist(left_eye, right_eye);
    if !(norm > 0.0) {
        return Err(Error::invalid("left and right eye coincide"));
    }
    Ok(dist(pred, truth) / norm)
}

/// Euclidean distance between a predicted and a true position.
pub fn pixel_deviation(pred: (f64, f64), truth: (f64, f64)) -> f64 {
    dist(pred, truth)
}

/// Fraction of distances strictly below `tau`.
pub fn localization_rate(distances: &[f64], tau: f64) -> Result<f64> {
    if distances.is_empty() {
        return Err(Error::invalid("no distances to evaluate"));
    }
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    Ok(distances.iter().filter(|&&d| d < tau).count() as f64 / distances.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CurveKind {
    Localization,
    Precision,
    Success,
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::Localization => "localization",
            CurveKind::Precision => "precision",
            CurveKind::Success => "success",
        })
    }
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "localization" => Ok(CurveKind::Localization),
            "precision" => Ok(CurveKind::Precision),
            "success" => Ok(CurveKind::Success),
            other => Err(Error::invalid(format!("unknown curve kind {other:?}"))),
        }
    }
}

/// Metric values over an ascending threshold list.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub kind: CurveKind,
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
}

impl Curve {
    /// Value at the first threshold equal to `t` (within 1e-9).
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.thresholds
            .iter()
            .position(|x| (x - t).abs() < 1e-9)
            .map(|i| self.values[i])
    }
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("thresholds must be strictly ascending"));
    }
    Ok(())
}

/// Localization rate at every threshold.
pub fn localization_curve(distances: &[f64], thresholds: &[f64]) -> Result<Curve> {
    check_thresholds(thresholds)?;
    let values = thresholds
        .iter()
        .map(|&t| localization_rate(distances, t))
        .collect::<Result<_>>()?;
    Ok(Curve {
        kind: CurveKind::Localization,
        thresholds: thresholds.to_vec(),
        values,
    })
}

fn check_lengths(pred: &[BBox], truth: &[BBox]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::mismatch(format!("{} frames", truth.len()), format!("{} frames", pred.len())));
    }
    if pred.is_empty() {
        return Err(Error::invalid("no frames to evaluate"));
    }
    Ok(())
}

/// Fraction of frames whose center error is at most each threshold.
pub fn precision_curve(pred: &[BBox], truth: &[BBox], thresholds: &[f64]) -> Result<Curve> {
    check_lengths(pred, truth)?;
    check_thresholds(thresholds)?;
    let errors: Vec<f64> = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| p.center_distance(t))
        .collect();
    let n = errors.len() as f64;
    let values = thresholds
        .iter()
        .map(|&t| errors.iter().filter(|&&e| e <= t).count() as f64 / n)
        .collect();
    Ok(Curve {
        kind: CurveKind::Precision,
        thresholds: thresholds.to_vec(),
        values,
    })
}

/// Fraction of frames whose IoU reaches each threshold, plus the AUC over [`auc_grid`].
pub fn success_curve(pred: &[BBox], truth: &[BBox], thresholds: &[f64]) -> Result<(Curve, f64)> {
    check_lengths(pred, truth)?;
    check_thresholds(thresholds)?;
    if let Some(b) = pred.iter().chain(truth).find(|b| !(b.area() > 0.0)) {
        return Err(Error::invalid(format!("zero-area box {b:?}")));
    }
    let overlaps: Vec<f64> = pred.iter().zip(truth).map(|(p, t)| p.iou(t)).collect();
    let n = overlaps.len() as f64;
    let rate = |t: f64| overlaps.iter().filter(|&&o| o >= t).count() as f64 / n;
    let values = thresholds.iter().map(|&t| rate(t)).collect();
    let grid = auc_grid();
    let auc = grid.iter().map(|&t| rate(t)).sum::<f64>() / grid.len() as f64;
    Ok((
        Curve {
            kind: CurveKind::Success,
            thresholds: thresholds.to_vec(),
            values,
        },
        auc,
    ))
}

/// Curve CSV text: `# key=value` metadata lines, then `kind,threshold,value`
/// rows ordered by kind and ascending threshold.
pub fn format_curves(curves: &[Curve], metadata: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in metadata {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str("kind,threshold,value\n");
    let mut sorted: Vec<&Curve> = curves.iter().collect();
    sorted.sort_by_key(|c| c.kind);
    for c in sorted {
        let mut rows: Vec<(f64, f64)> = c.thresholds.iter().copied().zip(c.values.iter().copied()).collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (t, v) in rows {
            out.push_str(&format!("{},{t},{v}\n", c.kind));
        }
    }
    out
}

pub fn emit_curves(curves: &[Curve], metadata: &[(String, String)], path: &Path) -> Result<()> {
    fs::write(path, format_curves(curves, metadata))?;
    Ok(())
}

/// Parsed curve file: metadata pairs and one curve per kind.
pub fn parse_curves(text: &str, path: &Path) -> Result<(Vec<(String, String)>, Vec<Curve>)> {
    let mut metadata = Vec::new();
    let mut curves: Vec<Curve> = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let bad = |message: String| Error::Data {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let (k, v) = meta
                .trim()
                .split_once('=')
                .ok_or_else(|| bad("metadata line without '='".into()))?;
            metadata.push((k.to_string(), v.to_string()));
            continue;
        }
        if !header_seen {
            if line != "kind,threshold,value" {
                return Err(bad(format!("unexpected header {line:?}")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", fields.len())));
        }
        let kind: CurveKind = fields[0].parse().map_err(|e: Error| bad(e.to_string()))?;
        let t: f64 = fields[1].parse().map_err(|_| bad(format!("bad threshold {:?}", fields[1])))?;
        let v: f64 = fields[2].parse().map_err(|_| bad(format!("bad value {:?}", fields[2])))?;
        match curves.iter_mut().find(|c| c.kind == kind) {
            Some(c) => {
                c.thresholds.push(t);
                c.values.push(v);
            }
            None => curves.push(Curve {
                kind,
                thresholds: vec![t],
                values: vec![v],
            }),
        }
    }
    Ok((metadata, curves))
}

pub fn read_curves(path: &Path) -> Result<(Vec<(String, String)>, Vec<Curve>)> {
    let text = fs::read_to_string(path)?;
    parse_curves(&text, path)
}
