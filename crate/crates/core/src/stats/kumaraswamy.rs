use serde::{Deserialize, Serialize};

use super::{DeviationSample, StatsError};

/// Kumaraswamy distribution on `[0, delta_t]`, CDF `1 - (1 - x^a)^b` with `x = t / delta_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KumaraswamyModel {
    pub a: f64,
    pub b: f64,
    pub delta_t: f64,
}

impl KumaraswamyModel {
    pub fn ccdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        if t >= self.delta_t {
            return 0.0;
        }
        unit_ccdf(t / self.delta_t, self.a, self.b)
    }
}

fn unit_ccdf(x: f64, a: f64, b: f64) -> f64 {
    (1.0 - x.powf(a)).max(0.0).powf(b)
}

const GRID_POINTS: usize = 101;
const LOG_GRID: usize = 41;
const A_B_RANGE: (f64, f64) = (0.1, 10.0);
const STEP_TOL: f64 = 1e-4;

fn sse(target: &[f64], a: f64, b: f64) -> f64 {
    target
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let x = i as f64 / (GRID_POINTS - 1) as f64;
            let r = unit_ccdf(x, a, b) - p;
            r * r
        })
        .sum()
}

/// Least-squares fit of the exceedance curve: a coarse log-spaced grid over
/// `a, b in [0.1, 10]`, then compass search in log-parameter space until the
/// step drops below `1e-4`.
pub fn fit_kumaraswamy(sample: &DeviationSample) -> Result<KumaraswamyModel, StatsError> {
    let n = sample.values.len();
    if n < 100 {
        return Err(StatsError::InvalidArgument(format!("need n >= 100, got {n}")));
    }
    let max = sample.max();
    let min = sample.values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max > min) {
        return Err(StatsError::DegenerateSample);
    }
    if !(max > 0.0) {
        return Err(StatsError::InvalidArgument("sample maximum must be positive".into()));
    }
    let mut v: Vec<f64> = sample.values.iter().map(|x| x / max).collect();
    v.sort_by(f64::total_cmp);
    let target: Vec<f64> = (0..GRID_POINTS)
        .map(|i| {
            let t = i as f64 / (GRID_POINTS - 1) as f64;
            (n - v.partition_point(|&x| x < t)) as f64 / n as f64
        })
        .collect();

    let (lo, hi) = (A_B_RANGE.0.ln(), A_B_RANGE.1.ln());
    let step0 = (hi - lo) / (LOG_GRID - 1) as f64;
    let mut best = (lo, lo, f64::INFINITY);
    for i in 0..LOG_GRID {
        let la = lo + i as f64 * step0;
        for j in 0..LOG_GRID {
            let lb = lo + j as f64 * step0;
            let e = sse(&target, la.exp(), lb.exp());
            if e < best.2 {
                best = (la, lb, e);
            }
        }
    }
    let (mut la, mut lb, mut e) = best;
    let mut step = step0;
    while step >= STEP_TOL {
        let mut moved = false;
        for (da, db) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let (ta, tb) = (la + da, lb + db);
            let te = sse(&target, ta.exp(), tb.exp());
            if te < e {
                (la, lb, e) = (ta, tb, te);
                moved = true;
                break;
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    Ok(KumaraswamyModel {
        a: la.exp(),
        b: lb.exp(),
        delta_t: max,
    })
}

#[cfg(test)]
mod tests {
    use super::super::ArcsineModel;
    use super::*;
    use rand::{Rng, SeedableRng};

    fn draw(n: usize, f: impl Fn(f64) -> f64) -> DeviationSample {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        DeviationSample {
            values: (0..n).map(|_| f(rng.gen::<f64>())).collect(),
            seed: 21,
        }
    }

    #[test]
    fn uniform_sample_fits_one_one() {
        let s = draw(100_000, |u| 3.0 * u);
        let k = fit_kumaraswamy(&s).unwrap();
        assert!((k.a - 1.0).abs() < 0.05 && (k.b - 1.0).abs() < 0.05, "{k:?}");
    }

    #[test]
    fn arcsine_sample_is_well_approximated() {
        let s = draw(100_000, |u| (std::f64::consts::TAU * u).sin().abs());
        let k = fit_kumaraswamy(&s).unwrap();
        let arc = ArcsineModel::new(k.delta_t, 0.0);
        // Sup distance between the fitted and arcsine exceedance curves.
        let direct = (0..2000)
            .map(|i| {
                let t = i as f64 / 2000.0 * k.delta_t;
                (k.ccdf(t) - arc.ccdf(t).unwrap()).abs()
            })
            .fold(0.0, f64::max);
        assert!(direct < 0.02, "{k:?}: {direct}");
    }

    #[test]
    fn degenerate_sample_rejected() {
        let s = DeviationSample { values: vec![0.5; 200], seed: 0 };
        assert_eq!(fit_kumaraswamy(&s), Err(StatsError::DegenerateSample));
        let small = DeviationSample { values: vec![0.5; 10], seed: 0 };
        assert!(fit_kumaraswamy(&small).is_err());
    }

    #[test]
    fn ccdf_endpoints() {
        let k = KumaraswamyModel { a: 2.0, b: 0.5, delta_t: 3.0 };
        assert_eq!(k.ccdf(0.0), 1.0);
        assert_eq!(k.ccdf(3.0), 0.0);
    }
}
