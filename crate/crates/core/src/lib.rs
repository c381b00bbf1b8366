//! Robust correlation estimation for high-frequency returns.
//!
//! The crate is organised around five pieces:
//!
//! - [`sampling`]: tick ingestion, previous-tick calendar sampling and the
//!   overlapping / shifted return grids used by the subsampled estimator.
//! - [`estimators`]: Pearson, Quadrant, Kendall and the subsampled Quadrant
//!   estimator `Q_S`, all mapped to correlations through Greiner's link.
//! - [`theory`]: asymptotic variances, probability limits under time-varying
//!   volatility, orthant probabilities and influence functions.
//! - [`simulator`]: bivariate Heston paths with stackable microstructure
//!   noise and jump layers.
//! - [`intraday`]: rolling-window correlations, relative volatilities, betas
//!   and the log decomposition of intraday beta variation.

pub mod error;
pub mod estimators;
pub mod intraday;
pub mod normal;
pub mod quadrature;
pub mod rng;
pub mod sampling;
pub mod simulator;
pub mod theory;

pub use error::{Error, Result};
pub use estimators::{CenteredPairs, CorrEstimate, EstimatorKind};
pub use sampling::{ReturnGrid, SampledPath, TickSeries};
