//! Correlation filters under a latent subspace constraint.
//!
//! Linear multi-channel filters (MCCF and LC-LCF) for detection and
//! landmark localization, kernelized filters (KCF and LC-KCF) for tracking,
//! the subspace-ADMM pieces they share, plus dataset generation,
//! corruption and evaluation metrics.

pub mod datasets;
pub mod detection;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod geometry;
pub mod io;
pub mod kernel_cf;
mod linalg;
pub mod linear_cf;
pub mod sadmm;
pub mod signal;

pub use error::{Error, Result};
pub use features::{FeatureConfig, FeatureKind, FeatureMap};
pub use geometry::BBox;
pub use kernel_cf::{TrackerConfig, TrackerMode, TrackerState};
pub use linear_cf::{FilterSpectrum, LcLcfConfig, TrainingSample, TrainingSet};
pub use sadmm::{PenaltyMode, PenaltySchedule, SubspaceHistory};
pub use signal::{ImagePlane, Spectrum};
