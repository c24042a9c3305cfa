use serde::{Deserialize, Serialize};

use super::{DeviationSample, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExceedanceKind {
    /// Delay deviation exceedance.
    #[serde(rename = "DDE")]
    Dde,
    /// Differential skew exceedance.
    #[serde(rename = "DSE")]
    Dse,
}

impl ExceedanceKind {
    pub fn label(self) -> &'static str {
        match self {
            ExceedanceKind::Dde => "DDE",
            ExceedanceKind::Dse => "DSE",
        }
    }
}

/// `P(T >= t)` at ascending thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceCurve {
    pub kind: ExceedanceKind,
    pub thresholds: Vec<f64>,
    pub probability: Vec<f64>,
}

impl ExceedanceCurve {
    /// Non-increasing, in `[0, 1]`, and 1 at `t = 0`.
    pub fn is_well_formed(&self) -> bool {
        let in_range = self.probability.iter().all(|p| (0.0..=1.0).contains(p));
        let monotone = self.probability.windows(2).all(|w| w[1] <= w[0]);
        let starts = match self.thresholds.first() {
            Some(&t) if t == 0.0 => self.probability[0] == 1.0,
            _ => true,
        };
        in_range && monotone && starts
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Empirical exceedance with the closed convention `P(T >= t)`.
pub fn exceedance(
    sample: &DeviationSample,
    thresholds: &[f64],
    kind: ExceedanceKind,
) -> Result<ExceedanceCurve, StatsError> {
    if sample.values.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if thresholds.iter().any(|t| !(*t >= 0.0)) || thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(StatsError::InvalidArgument(
            "thresholds must be non-negative and ascending".into(),
        ));
    }
    let v = sorted(&sample.values);
    let n = v.len() as f64;
    let probability = thresholds
        .iter()
        .map(|&t| (v.len() - v.partition_point(|&x| x < t)) as f64 / n)
        .collect();
    Ok(ExceedanceCurve {
        kind,
        thresholds: thresholds.to_vec(),
        probability,
    })
}

/// `0, step, 2 step, ...` up to `ceil(delta_t)` inclusive.
pub fn threshold_grid(delta_t: f64, step: f64) -> Vec<f64> {
    let top = delta_t.max(0.0).ceil();
    let n = (top / step + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

/// Sup-distance between the empirical exceedance of `sample` and `model_ccdf`.
///
/// The empirical curve is a step function, so it is compared at every distinct
/// sample value, at the midpoints between consecutive distinct values, and just
/// above the largest value.
pub fn ks_statistic(sample: &DeviationSample, model_ccdf: impl Fn(f64) -> f64) -> Result<f64, StatsError> {
    if sample.values.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let v = sorted(&sample.values);
    let n = v.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < n {
        let x = v[i];
        let mut j = i;
        while j < n && v[j] == x {
            j += 1;
        }
        // n - i values are >= x; n - j are > x.
        d = d.max(((n - i) as f64 / nf - model_ccdf(x)).abs());
        let above = (n - j) as f64 / nf;
        let probe = if j < n { 0.5 * (x + v[j]) } else { x.next_up() };
        d = d.max((above - model_ccdf(probe)).abs());
        i = j;
    }
    Ok(d)
}
