//! Subspace-ADMM building blocks shared by the linear and kernelized solvers.
//!
//! Each outer iteration alternates a closed-form penalized solve
//! `h ← argmin E(h) + σ/2‖h − g‖²` with a projection `g ← Φ(h, history)`
//! onto the span of previously computed solutions. The Lagrange multiplier
//! of the augmented Lagrangian is dropped, so only `σ` and the history are
//! carried between iterations.

use std::collections::VecDeque;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::complex_distance;

/// Distances below this are treated as coincident points.
pub const ZERO_DISTANCE: f64 = 1e-12;

/// Tolerance of [`convergence_certificate`].
pub const CERTIFICATE_TOLERANCE: f64 = 1e-8;

/// Ordered past solutions spanning the latent subspace.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubspaceHistory {
    entries: VecDeque<Vec<Complex64>>,
    capacity: Option<usize>,
}

impl SubspaceHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sliding window keeping only the `capacity` most recent entries.
    pub fn with_capacity(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("history window must be at least 1"));
        }
        Ok(Self {
            entries: VecDeque::with_capacity(capacity + 1),
            capacity: Some(capacity),
        })
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Length shared by every entry, if any entry exists.
    pub fn dim(&self) -> Option<usize> {
        self.entries.front().map(Vec::len)
    }

    pub fn entries(&self) -> impl Iterator<Item = &[Complex64]> {
        self.entries.iter().map(Vec::as_slice)
    }

    /// Append a solution, evicting the oldest entry when the window is full.
    pub fn push(&mut self, entry: Vec<Complex64>) -> Result<()> {
        if let Some(dim) = self.dim() {
            if dim != entry.len() {
                return Err(Error::mismatch(dim, entry.len()));
            }
        }
        self.entries.push_back(entry);
        if let Some(cap) = self.capacity {
            while self.entries.len() > cap {
                self.entries.pop_front();
            }
        }
        Ok(())
    }
}

/// Inverse-distance weights `ωᵢ ∝ 1/‖current − entryᵢ‖`, L1-normalized.
///
/// When `current` coincides with one or more entries, those entries share the
/// whole weight (the limit of the weighting).
pub fn projection_weights(current: &[Complex64], history: &SubspaceHistory) -> Result<Vec<f64>> {
    let dim = history.dim().ok_or(Error::EmptyHistory)?;
    if dim != current.len() {
        return Err(Error::mismatch(dim, current.len()));
    }
    let distances: Vec<f64> = history
        .entries()
        .map(|e| complex_distance(current, e))
        .collect();

    let coincident = distances.iter().filter(|&&d| d < ZERO_DISTANCE).count();
    let mut weights: Vec<f64> = if coincident > 0 {
        distances
            .iter()
            .map(|&d| if d < ZERO_DISTANCE { 1.0 } else { 0.0 })
            .collect()
    } else {
        distances.iter().map(|d| 1.0 / d).collect()
    };
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(weights)
}

/// Projection `Φ(current, history) = Σ ωᵢ·entryᵢ` onto the span of the history.
pub fn project_subspace(current: &[Complex64], history: &SubspaceHistory) -> Result<Vec<Complex64>> {
    let weights = projection_weights(current, history)?;
    if history.len() == 1 {
        return Ok(history.entries[0].clone());
    }
    let mut out = vec![Complex64::new(0.0, 0.0); current.len()];
    for (w, entry) in weights.iter().zip(history.entries()) {
        if *w == 0.0 {
            continue;
        }
        for (o, e) in out.iter_mut().zip(entry) {
            *o += e * *w;
        }
    }
    Ok(out)
}

/// Which acceptance rule the penalty schedule applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyMode {
    /// Accept when `ε < η·ε_best`, otherwise double σ (linear solver).
    Scaled,
    /// Accept when `ε < ε_best`, otherwise multiply σ by `growth` (tracker).
    Strict,
}

/// Adaptive penalty `σ` together with the best residual seen so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySchedule {
    pub sigma: f64,
    pub eta: f64,
    pub growth: f64,
    pub eps_best: f64,
}

impl PenaltySchedule {
    pub fn new(sigma: f64, eta: f64, growth: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid(format!("eta must lie in (0, 1], got {eta}")));
        }
        if !(growth > 1.0) || !growth.is_finite() {
            return Err(Error::invalid(format!("growth must exceed 1, got {growth}")));
        }
        Ok(Self {
            sigma,
            eta,
            growth,
            eps_best: f64::INFINITY,
        })
    }

    /// Returns the updated schedule and whether the step counted as an improvement.
    pub fn update(&self, eps: f64, mode: PenaltyMode) -> Result<(Self, bool)> {
        if !(eps >= 0.0) {
            return Err(Error::invalid(format!("residual must be >= 0, got {eps}")));
        }
        let threshold = match mode {
            PenaltyMode::Scaled => self.eta * self.eps_best,
            PenaltyMode::Strict => self.eps_best,
        };
        let mut next = *self;
        let improved = eps < threshold;
        if improved {
            next.eps_best = eps;
        } else {
            let factor = match mode {
                PenaltyMode::Scaled => 2.0,
                PenaltyMode::Strict => self.growth,
            };
            next.sigma = (self.sigma * factor).min(f64::MAX);
        }
        Ok((next, improved))
    }
}

/// Both sides of the per-iteration convergence bound
/// `‖h⁺ − h*‖² ≤ ½‖h* − h‖² − ½‖h⁺ − g‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn convergence_certificate(
    h_next: &[Complex64],
    h_prev: &[Complex64],
    g_prev: &[Complex64],
    h_star: &[Complex64],
) -> Result<Certificate> {
    let n = h_next.len();
    for v in [h_prev, g_prev, h_star] {
        if v.len() != n {
            return Err(Error::mismatch(n, v.len()));
        }
    }
    let lhs = complex_distance(h_next, h_star).powi(2);
    let rhs = 0.5 * complex_distance(h_star, h_prev).powi(2)
        - 0.5 * complex_distance(h_next, g_prev).powi(2);
    Ok(Certificate {
        lhs,
        rhs,
        holds: lhs <= rhs + CERTIFICATE_TOLERANCE,
    })
}
