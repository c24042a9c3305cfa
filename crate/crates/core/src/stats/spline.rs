use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::sweep::{DelayProfile, SkewProfile};

/// One cubic piece `a + b u + c u^2 + d u^3` with `u = x - x_start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub x_start: f64,
    pub width: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Piece {
    fn eval(&self, u: f64) -> f64 {
        ((self.d * u + self.c) * u + self.b) * u + self.a
    }

    fn deriv(&self, u: f64) -> f64 {
        (3.0 * self.d * u + 2.0 * self.c) * u + self.b
    }

    fn integral(&self) -> f64 {
        let h = self.width;
        h * (self.a + h * (self.b / 2.0 + h * (self.c / 3.0 + h * self.d / 4.0)))
    }

    /// Interior critical points, `0 < u < width`.
    fn critical_points(&self) -> Vec<f64> {
        let (qa, qb, qc) = (3.0 * self.d, 2.0 * self.c, self.b);
        let mut roots = Vec::new();
        if qa.abs() < 1e-300 {
            if qb.abs() > 1e-300 {
                roots.push(-qc / qb);
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                // Numerically stable pair.
                let q = -0.5 * (qb + qb.signum() * sq);
                if q != 0.0 {
                    roots.push(q / qa);
                    roots.push(qc / q);
                } else {
                    roots.push(0.0);
                }
            }
        }
        roots.retain(|u| *u > 0.0 && *u < self.width);
        roots
    }
}

/// Periodic cubic spline through a sampled profile over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolatedProfile {
    pub style: String,
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub period: f64,
    pub pieces: Vec<Piece>,
    pub mean: f64,
}

/// Dense solve with partial pivoting; the cyclic systems here are tiny.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Vec<f64> {
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let p = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            if f != 0.0 {
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut v = b[row];
        for k in row + 1..n {
            v -= a[row * n + k] * x[k];
        }
        x[row] = v / a[row * n + row];
    }
    x
}

impl InterpolatedProfile {
    /// Fits a periodic spline to the samples falling in the first period
    /// `[min(offsets), min(offsets) + period)`.
    pub fn new(style: &str, offsets: &[f64], values: &[f64], period: f64) -> Result<Self, StatsError> {
        if offsets.len() != values.len() {
            return Err(StatsError::Profile("offsets and values differ in length".into()));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(StatsError::Profile(format!("period must be positive, got {period}")));
        }
        let mut pts: Vec<(f64, f64)> = offsets.iter().copied().zip(values.iter().copied()).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let Some(&(origin, _)) = pts.first() else {
            return Err(StatsError::TooFewKnots(0));
        };
        let end = origin + period;
        let slack = 1e-9 * period;
        pts.retain(|(o, _)| *o < end - slack);
        pts.dedup_by(|a, b| (a.0 - b.0).abs() <= slack);
        let m = pts.len();
        if m < 4 {
            return Err(StatsError::TooFewKnots(m));
        }
        let knots: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let h: Vec<f64> = (0..m)
            .map(|i| if i + 1 < m { knots[i + 1] - knots[i] } else { end - knots[i] })
            .collect();
        let max_gap = h.iter().copied().fold(0.0, f64::max);
        if max_gap > 2.0 * period / m as f64 {
            return Err(StatsError::Coverage {
                gap: max_gap,
                period,
            });
        }

        // Second derivatives from the cyclic tridiagonal system.
        let mut a = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            let prev = (i + m - 1) % m;
            let next = (i + 1) % m;
            a[i * m + prev] += h[prev];
            a[i * m + i] += 2.0 * (h[prev] + h[i]);
            a[i * m + next] += h[i];
            rhs[i] = 6.0 * ((ys[next] - ys[i]) / h[i] - (ys[i] - ys[prev]) / h[prev]);
        }
        let mm = solve_dense(a, rhs, m);
        let pieces: Vec<Piece> = (0..m)
            .map(|i| {
                let next = (i + 1) % m;
                let hi = h[i];
                Piece {
                    x_start: knots[i],
                    width: hi,
                    a: ys[i],
                    b: (ys[next] - ys[i]) / hi - hi * (2.0 * mm[i] + mm[next]) / 6.0,
                    c: mm[i] / 2.0,
                    d: (mm[next] - mm[i]) / (6.0 * hi),
                }
            })
            .collect();
        let mean = pieces.iter().map(Piece::integral).sum::<f64>() / period;
        Ok(Self {
            style: style.into(),
            knots,
            values: ys,
            period,
            pieces,
            mean,
        })
    }

    pub fn from_delay(p: &DelayProfile) -> Result<Self, StatsError> {
        Self::new(&p.style, &p.offsets, &p.delay, p.period)
    }

    pub fn from_skew(p: &SkewProfile) -> Result<Self, StatsError> {
        Self::new(&p.style, &p.offsets, &p.skew, p.period)
    }

    pub fn origin(&self) -> f64 {
        self.knots[0]
    }

    fn locate(&self, x: f64) -> (&Piece, f64) {
        let u = (x - self.origin()).rem_euclid(self.period) + self.origin();
        let k = self.knots.partition_point(|&k| k <= u).saturating_sub(1);
        let p = &self.pieces[k];
        (p, (u - p.x_start).clamp(0.0, p.width))
    }

    /// Spline value at any offset, folded into the period.
    pub fn eval(&self, x: f64) -> f64 {
        let (p, u) = self.locate(x);
        p.eval(u)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (p, u) = self.locate(x);
        p.deriv(u)
    }

    /// `(argmin, min, argmax, max)` over one period: a dense scan locates the
    /// extremum, then the critical points of the neighbouring cubic pieces refine it.
    pub fn extrema(&self) -> (f64, f64, f64, f64) {
        let m = self.pieces.len();
        let n = (50 * m).max(1000);
        let step = self.period / n as f64;
        let (mut imin, mut imax) = (0usize, 0usize);
        let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let v = self.eval(self.origin() + i as f64 * step);
            if v < vmin {
                vmin = v;
                imin = i;
            }
            if v > vmax {
                vmax = v;
                imax = i;
            }
        }
        let refine = |i: usize, better: &dyn Fn(f64, f64) -> bool| -> (f64, f64) {
            let x = self.origin() + i as f64 * step;
            let (mut bx, mut bv) = (x, self.eval(x));
            let k = self.knots.partition_point(|&kn| kn <= x).saturating_sub(1);
            for dk in [m - 1, 0, 1] {
                let p = &self.pieces[(k + dk) % m];
                let mut cands = p.critical_points();
                cands.push(0.0);
                for u in cands {
                    let v = p.eval(u);
                    if better(v, bv) {
                        bx = p.x_start + u;
                        bv = v;
                    }
                }
            }
            (bx, bv)
        };
        let (xmin, vmin) = refine(imin, &|v, b| v < b);
        let (xmax, vmax) = refine(imax, &|v, b| v > b);
        (xmin, vmin, xmax, vmax)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sinusoid(a: f64, l: f64, n: usize, mean: f64) -> InterpolatedProfile {
        let xs: Vec<f64> = (0..n).map(|i| -12.0 + i as f64 * l / (n - 1) as f64 * ((n - 1) as f64 / n as f64)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| mean + a * (2.0 * PI * x / l).sin()).collect();
        InterpolatedProfile::new("sin", &xs, &ys, l).unwrap()
    }

    #[test]
    fn reproduces_knots() {
        let xs: Vec<f64> = (-12..=12).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 140.0 + (x * 0.7).cos() + 0.1 * x).collect();
        let s = InterpolatedProfile::new("k", &xs, &ys, 14.0).unwrap();
        for (x, y) in s.knots.iter().zip(&s.values) {
            assert!((s.eval(*x) - y).abs() <= 1e-12 * y.abs(), "{x}");
        }
        assert_eq!(s.knots.len(), 14);
    }

    #[test]
    fn constant_profile() {
        let xs: Vec<f64> = (-12..=12).map(f64::from).collect();
        let s = InterpolatedProfile::new("c", &xs, &vec![150.0; 25], 22.0).unwrap();
        assert!((s.mean - 150.0).abs() < 1e-12);
        assert!((s.eval(3.3) - 150.0).abs() < 1e-12);
    }

    #[test]
    fn sinusoid_accuracy() {
        // 25 samples over one period.
        let (a, l) = (1.0, 14.0);
        let s = sinusoid(a, l, 25, 0.0);
        let mut err: f64 = 0.0;
        for i in 0..5000 {
            let x = i as f64 * l / 5000.0;
            err = err.max((s.eval(x) - a * (2.0 * PI * x / l).sin()).abs());
        }
        assert!(err < 1e-3 * a, "max error {err}");
        assert!(s.mean.abs() < 1e-12);
    }

    #[test]
    fn seam_is_smooth() {
        let s = sinusoid(2.0, 16.0, 16, 5.0);
        let end = s.origin() + s.period;
        let eps = 1e-9;
        assert!((s.eval(end - eps) - s.eval(s.origin())).abs() < 1e-7);
        assert!((s.derivative(end - eps) - s.derivative(s.origin())).abs() < 1e-6);
    }

    #[test]
    fn extrema_of_sinusoid() {
        let s = sinusoid(3.0, 18.0, 18, 0.0);
        let (xmin, vmin, xmax, vmax) = s.extrema();
        assert!((vmax - 3.0).abs() < 1e-2 && (vmin + 3.0).abs() < 1e-2);
        assert!((s.eval(xmax) - vmax).abs() < 1e-12 && (s.eval(xmin) - vmin).abs() < 1e-12);
        assert!(s.derivative(xmax).abs() < 1e-9);
    }

    #[test]
    fn rejects_sparse_or_gappy_profiles() {
        assert!(matches!(
            InterpolatedProfile::new("x", &[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0], 3.0),
            Err(StatsError::TooFewKnots(3))
        ));
        // Knots only cover half the period.
        let xs: Vec<f64> = (0..8).map(f64::from).collect();
        assert!(matches!(
            InterpolatedProfile::new("x", &xs, &vec![0.0; 8], 16.0),
            Err(StatsError::Coverage { .. })
        ));
    }
}
