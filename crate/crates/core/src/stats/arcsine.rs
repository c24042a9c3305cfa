use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use super::{InterpolatedProfile, ProfileKind, StatsError};

/// One-parameter model of `|delta_t sin(2 pi x / L + alpha)|` for uniform `x`.
/// `alpha` is kept for reporting; the distribution does not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcsineModel {
    pub delta_t: f64,
    pub alpha: f64,
}

impl ArcsineModel {
    pub fn new(delta_t: f64, alpha: f64) -> Self {
        assert!(delta_t >= 0.0, "delta_t must be non-negative");
        Self { delta_t, alpha }
    }

    /// Density `2 / (pi dt sqrt(1 - (t/dt)^2))` on `[0, dt)`; the pole at `dt` is rejected.
    pub fn pdf(&self, t: f64) -> Result<f64, StatsError> {
        let dt = self.delta_t;
        if !(t >= 0.0 && t < dt) {
            return Err(StatsError::OutOfSupport { t, delta_t: dt });
        }
        let r = t / dt;
        Ok(2.0 / (PI * dt * (1.0 - r * r).sqrt()))
    }

    /// `P(T >= t) = 1 - (2/pi) asin(t/dt)`, zero beyond `dt`.
    pub fn ccdf(&self, t: f64) -> Result<f64, StatsError> {
        if !(t >= 0.0) {
            return Err(StatsError::OutOfSupport { t, delta_t: self.delta_t });
        }
        if t >= self.delta_t {
            return Ok(if t == 0.0 { 1.0 } else { 0.0 });
        }
        Ok(1.0 - 2.0 / PI * (t / self.delta_t).asin())
    }

    pub fn cdf(&self, t: f64) -> Result<f64, StatsError> {
        self.ccdf(t).map(|s| 1.0 - s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcsineFit {
    pub model: ArcsineModel,
    pub argmin: f64,
    pub min: f64,
    pub argmax: f64,
    pub max: f64,
}

/// Amplitude from the profile extrema: half the peak-to-peak swing for delay,
/// the largest magnitude for skew.
pub fn fit_arcsine(spline: &InterpolatedProfile, kind: ProfileKind) -> ArcsineFit {
    let (argmin, min, argmax, max) = spline.extrema();
    let (delta_t, peak) = match kind {
        ProfileKind::Delay => ((max - min) / 2.0, argmax),
        ProfileKind::Skew => {
            if max >= -min {
                (max, argmax)
            } else {
                (-min, argmin)
            }
        }
    };
    // Phase placing the sine peak at `peak`, wrapped to [-pi, pi).
    let alpha = (FRAC_PI_2 - TAU * peak / spline.period + PI).rem_euclid(TAU) - PI;
    ArcsineFit {
        model: ArcsineModel::new(delta_t.max(0.0), alpha),
        argmin,
        min,
        argmax,
        max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine_profile(a: f64, phase: f64) -> InterpolatedProfile {
        let l = 22.0;
        let xs: Vec<f64> = (0..88).map(|i| -12.0 + i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 150.0 + a * (TAU * x / l + phase).sin()).collect();
        InterpolatedProfile::new("s", &xs, &ys, l).unwrap()
    }

    #[test]
    fn pdf_values() {
        let m = ArcsineModel::new(1.0, 0.0);
        assert!((m.pdf(0.0).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert!((m.pdf(0.5).unwrap() - 4.0 / (PI * 3f64.sqrt())).abs() < 1e-15);
        assert!((m.pdf(0.5).unwrap() - 0.7351).abs() < 1e-4);
        assert!(m.pdf(1.0).is_err());
        assert!(m.pdf(-0.1).is_err());
        assert!(m.pdf(1.0 - 1e-12).unwrap() > 1e5);
    }

    #[test]
    fn ccdf_values() {
        let m = ArcsineModel::new(4.0, 0.0);
        assert_eq!(m.ccdf(0.0).unwrap(), 1.0);
        assert_eq!(m.ccdf(4.0).unwrap(), 0.0);
        assert_eq!(m.ccdf(9.0).unwrap(), 0.0);
        assert!((m.ccdf(2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.ccdf(4.0 * 2f64.sqrt() / 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(m.ccdf(-1.0).is_err());
        let z = ArcsineModel::new(0.0, 0.0);
        assert_eq!((z.ccdf(0.0).unwrap(), z.ccdf(0.1).unwrap()), (1.0, 0.0));
    }

    #[test]
    fn pdf_integrates_to_one() {
        // Composite Gauss-Legendre on [0, 1 - e] plus the analytic tail mass.
        let m = ArcsineModel::new(2.0, 0.0);
        let e = 1e-4;
        let top = m.delta_t * (1.0 - e);
        let nodes = [(-0.906179845938664, 0.236926885056189), (-0.538469310105683, 0.478628670499366), (0.0, 0.568888888888889), (0.538469310105683, 0.478628670499366), (0.906179845938664, 0.236926885056189)];
        // Geometric panels toward the pole.
        let mut mass = 0.0;
        let mut lo = 0.0;
        let mut width = top / 2.0;
        while lo < top * (1.0 - 1e-15) {
            let hi = (lo + width).min(top);
            let (c, r) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
            mass += nodes.iter().map(|(x, w)| w * r * m.pdf(c + r * x).unwrap()).sum::<f64>();
            lo = hi;
            width = (top - lo) / 2.0;
            if top - lo < 1e-12 {
                break;
            }
        }
        let tail = m.ccdf(top).unwrap();
        assert!((mass + tail - 1.0).abs() < 1e-6, "{}", mass + tail);
        assert!((m.cdf(top).unwrap() + tail - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fit_recovers_amplitude() {
        let s = sine_profile(3.0, 0.4);
        let f = fit_arcsine(&s, ProfileKind::Delay);
        assert!((f.model.delta_t - 3.0).abs() < 1e-6 * 3.0, "{}", f.model.delta_t);
        assert!((f.model.alpha - 0.4).abs() < 1e-3, "{}", f.model.alpha);
        // The extrema are spline values at the reported positions.
        assert_eq!(s.eval(f.argmax), f.max);
        assert_eq!(s.eval(f.argmin), f.min);
    }

    #[test]
    fn constant_profile_has_zero_amplitude() {
        let xs: Vec<f64> = (0..16).map(f64::from).collect();
        let s = InterpolatedProfile::new("c", &xs, &vec![7.0; 16], 16.0).unwrap();
        assert!(fit_arcsine(&s, ProfileKind::Delay).model.delta_t.abs() < 1e-12);
        let zero = InterpolatedProfile::new("z", &xs, &vec![0.0; 16], 16.0).unwrap();
        assert_eq!(fit_arcsine(&zero, ProfileKind::Skew).model.delta_t, 0.0);
    }
}
