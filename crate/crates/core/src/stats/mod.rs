//! Probability densities, exceedance curves and analytical models built from
//! delay and skew profiles.

mod arcsine;
mod exceedance;
mod kumaraswamy;
mod sampling;
mod spline;

pub use arcsine::{fit_arcsine, ArcsineFit, ArcsineModel};
pub use exceedance::{exceedance, ks_statistic, threshold_grid, ExceedanceCurve, ExceedanceKind};
pub use kumaraswamy::{fit_kumaraswamy, KumaraswamyModel};
pub use sampling::{deviation_series, value_series, DeviationSample, Histogram, SAMPLE_BLOCK};
pub use spline::{InterpolatedProfile, Piece};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("need at least 4 knots per period, got {0}")]
    TooFewKnots(usize),
    #[error("knots do not cover the period evenly (gap {gap} in period {period})")]
    Coverage { gap: f64, period: f64 },
    #[error("invalid profile: {0}")]
    Profile(String),
    #[error("empty sample")]
    EmptySample,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate sample: all values are equal")]
    DegenerateSample,
    #[error("t = {t} is outside the support [0, {delta_t})")]
    OutOfSupport { t: f64, delta_t: f64 },
}

/// What a profile measures, which fixes how deviations are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// Single-ended delay: deviation from the period mean.
    Delay,
    /// Differential skew: oscillates about zero, deviation is its magnitude.
    Skew,
}

impl ProfileKind {
    pub fn exceedance_kind(self) -> ExceedanceKind {
        match self {
            ProfileKind::Delay => ExceedanceKind::Dde,
            ProfileKind::Skew => ExceedanceKind::Dse,
        }
    }
}
