use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{InterpolatedProfile, ProfileKind, StatsError};
use crate::par::{self, Parallelism};

/// Offsets are drawn in blocks of this size, each from its own ChaCha stream,
/// so the sample does not depend on how blocks are scheduled.
pub const SAMPLE_BLOCK: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSample {
    pub values: Vec<f64>,
    pub seed: u64,
}

impl DeviationSample {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Uniform offsets over one period, evaluated through `f`.
fn sample_offsets<F>(spline: &InterpolatedProfile, n: usize, seed: u64, mode: Parallelism, f: F) -> Vec<f64>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let blocks = n.div_ceil(SAMPLE_BLOCK);
    let (origin, period) = (spline.origin(), spline.period);
    let chunks = par::map_range(mode, blocks, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let len = SAMPLE_BLOCK.min(n - b * SAMPLE_BLOCK);
        (0..len)
            .map(|_| f(origin + period * rng.gen::<f64>()))
            .collect::<Vec<f64>>()
    });
    chunks.concat()
}

/// Deviation values for uniformly distributed trace offsets.
pub fn deviation_series(
    spline: &InterpolatedProfile,
    kind: ProfileKind,
    n: usize,
    seed: u64,
    mode: Parallelism,
) -> Result<DeviationSample, StatsError> {
    if n == 0 {
        return Err(StatsError::InvalidArgument("sample size must be >= 1".into()));
    }
    let mean = spline.mean;
    let values = match kind {
        ProfileKind::Delay => sample_offsets(spline, n, seed, mode, |x| (spline.eval(x) - mean).abs()),
        ProfileKind::Skew => sample_offsets(spline, n, seed, mode, |x| spline.eval(x).abs()),
    };
    Ok(DeviationSample { values, seed })
}

/// Raw profile values (delay or skew) for uniformly distributed offsets.
pub fn value_series(
    spline: &InterpolatedProfile,
    n: usize,
    seed: u64,
    mode: Parallelism,
) -> Result<Vec<f64>, StatsError> {
    if n == 0 {
        return Err(StatsError::InvalidArgument("sample size must be >= 1".into()));
    }
    Ok(sample_offsets(spline, n, seed, mode, |x| spline.eval(x)))
}

/// Uniform-bin histogram normalized to unit area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
}

impl Histogram {
    /// Bins spanning `[lo, hi]`. A zero-width range is widened so every value
    /// lands in the first bin.
    pub fn with_range(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self, StatsError> {
        if values.is_empty() {
            return Err(StatsError::EmptySample);
        }
        if bins == 0 || values.len() < bins {
            return Err(StatsError::InvalidArgument(format!(
                "need 1 <= bins <= n, got {bins} bins for {} values",
                values.len()
            )));
        }
        let span = hi - lo;
        let floor = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        let span = if span > floor { span } else { floor };
        let width = span / bins as f64;
        let mut counts = vec![0u64; bins];
        for &v in values {
            let k = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
            counts[k] += 1;
        }
        let n = values.len() as f64;
        let density = counts.iter().map(|&c| c as f64 / (n * width)).collect();
        let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
        Ok(Self { edges, counts, density })
    }

    /// Density of a deviation sample over `[0, max]`.
    pub fn of_deviations(sample: &DeviationSample, bins: usize) -> Result<Self, StatsError> {
        if sample.values.is_empty() {
            return Err(StatsError::EmptySample);
        }
        Self::with_range(&sample.values, bins, 0.0, sample.max())
    }

    /// Density of raw values over `[min, max]`.
    pub fn of_values(values: &[f64], bins: usize) -> Result<Self, StatsError> {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::with_range(values, bins, lo, hi)
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    /// True when the two end bins hold the two largest densities.
    pub fn is_u_shaped(&self) -> bool {
        let n = self.density.len();
        if n < 3 {
            return false;
        }
        let ends = self.density[0].min(self.density[n - 1]);
        self.density[1..n - 1].iter().all(|&d| d < ends)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> InterpolatedProfile {
        let xs: Vec<f64> = (0..14).map(f64::from).collect();
        InterpolatedProfile::new("flat", &xs, &vec![140.0; 14], 14.0).unwrap()
    }

    fn sine(a: f64) -> InterpolatedProfile {
        let xs: Vec<f64> = (0..64).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 100.0 + a * (2.0 * std::f64::consts::PI * x / 16.0).sin()).collect();
        InterpolatedProfile::new("sine", &xs, &ys, 16.0).unwrap()
    }

    #[test]
    fn constant_profile_has_zero_deviation() {
        let s = deviation_series(&flat(), ProfileKind::Delay, 1000, 1, Parallelism::Parallel).unwrap();
        assert!(s.values.iter().all(|&v| v.abs() < 1e-9));
        let h = Histogram::of_deviations(&s, 20).unwrap();
        assert_eq!(h.counts[0], 1000);
        let area: f64 = h.density.iter().map(|d| d * h.bin_width()).sum();
        assert!((area - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sinusoid_deviation_range() {
        let a = 2.5;
        let s = deviation_series(&sine(a), ProfileKind::Delay, 100_000, 7, Parallelism::Parallel).unwrap();
        let max = s.max();
        assert!(s.values.iter().all(|&v| v >= 0.0 && v <= a * (1.0 + 1e-4)));
        assert!(max > 0.999 * a);
    }

    #[test]
    fn seeded_and_mode_independent() {
        let sp = sine(1.0);
        let a = deviation_series(&sp, ProfileKind::Skew, 30_000, 42, Parallelism::Parallel).unwrap();
        let b = deviation_series(&sp, ProfileKind::Skew, 30_000, 42, Parallelism::Sequential).unwrap();
        assert_eq!(a, b);
        let c = deviation_series(&sp, ProfileKind::Skew, 30_000, 43, Parallelism::Parallel).unwrap();
        assert_ne!(a.values, c.values);
        assert!(deviation_series(&sp, ProfileKind::Skew, 0, 1, Parallelism::Parallel).is_err());
    }

    #[test]
    fn uniform_values_give_flat_density() {
        // Binomial oracle: each of 20 bins expects 5000 +- 69 counts.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..100_000).map(|_| rng.gen::<f64>()).collect();
        let h = Histogram::with_range(&v, 20, 0.0, 1.0).unwrap();
        for d in &h.density {
            assert!((d - 1.0).abs() < 0.05, "{d}");
        }
        assert_eq!(h.counts.iter().sum::<u64>(), 100_000);
    }

    #[test]
    fn sinusoid_values_are_u_shaped() {
        let v = value_series(&sine(3.0), 100_000, 5, Parallelism::Parallel).unwrap();
        let h = Histogram::of_values(&v, 20).unwrap();
        assert!(h.is_u_shaped(), "{:?}", h.density);
    }

    #[test]
    fn histogram_errors() {
        assert_eq!(Histogram::with_range(&[], 20, 0.0, 1.0), Err(StatsError::EmptySample));
        assert!(Histogram::with_range(&[1.0, 2.0], 20, 0.0, 1.0).is_err());
    }
}
