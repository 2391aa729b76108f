//! Spatially-adaptive sensing for nonparametric regression.
//!
//! The crate estimates a function on `[0, 1)` from noisy point observations
//! by hard-thresholding wavelet coefficients, and chooses where to observe
//! next by steering the design towards regions where the estimated
//! coefficients are large.
//!
//! - [`wavelet`]: periodized Daubechies analysis and synthesis on dyadic grids.
//! - [`dyadic`] and [`design`]: exact dyadic design points and grid bookkeeping.
//! - [`estimator`]: coefficient estimation under arbitrary dyadic designs,
//!   thresholding, noise estimation and reconstruction.
//! - [`sensing`]: the staged adaptive design loop.
//! - [`functions`]: Donoho–Johnstone test signals and function-class checkers.
//! - [`harness`]: noisy oracles, replication, and the comparison statistics.

pub mod design;
pub mod dyadic;
mod error;
pub mod estimator;
pub mod functions;
pub mod harness;
pub mod sensing;
pub mod wavelet;

pub use design::{Design, EffectiveDensity, GridDepths, Observations};
pub use dyadic::{DyadicInterval, DyadicPoint};
pub use error::{Error, Result};
pub use estimator::{CoefficientSet, EstimatorConfig, Mode, NoiseLevel};
pub use functions::TestFunction;
pub use sensing::{SensingConfig, SensingRun, StageSchedule, TargetDensity};
pub use wavelet::{CoefficientPyramid, WaveletSpec};
