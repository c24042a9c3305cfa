//! Conjugate gradients preconditioned by an aggregation multigrid V-cycle.
//!
//! The operator is a five-point conductance stencil on a `ny x nz` cell grid:
//! `(A x)_i = diag_i x_i - sum_j g_ij x_j`. Coarse levels merge 2x2 blocks of
//! cells and take the Galerkin product with piecewise-constant prolongation, which
//! keeps the five-point structure: a coarse edge conductance is the sum of the
//! fine conductances crossing between the two blocks.

#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    pub ny: usize,
    pub nz: usize,
    /// Conductance between `(iy, iz)` and `(iy + 1, iz)`, indexed `iz * (ny - 1) + iy`.
    pub gy: Vec<f64>,
    /// Conductance between `(iy, iz)` and `(iy, iz + 1)`, indexed `iz * ny + iy`.
    pub gz: Vec<f64>,
    pub diag: Vec<f64>,
    pub active: Vec<bool>,
}

impl Stencil {
    pub fn zeros(ny: usize, nz: usize) -> Self {
        Self {
            ny,
            nz,
            gy: vec![0.0; ny.saturating_sub(1) * nz],
            gz: vec![0.0; ny * nz.saturating_sub(1)],
            diag: vec![0.0; ny * nz],
            active: vec![false; ny * nz],
        }
    }

    pub fn len(&self) -> usize {
        self.ny * self.nz
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let (ny, nz) = (self.ny, self.nz);
        for iz in 0..nz {
            for iy in 0..ny {
                let i = iz * ny + iy;
                if !self.active[i] {
                    out[i] = 0.0;
                    continue;
                }
                let mut acc = self.diag[i] * x[i];
                if iy > 0 {
                    acc -= self.gy[iz * (ny - 1) + iy - 1] * x[i - 1];
                }
                if iy + 1 < ny {
                    acc -= self.gy[iz * (ny - 1) + iy] * x[i + 1];
                }
                if iz > 0 {
                    acc -= self.gz[(iz - 1) * ny + iy] * x[i - ny];
                }
                if iz + 1 < nz {
                    acc -= self.gz[iz * ny + iy] * x[i + ny];
                }
                out[i] = acc;
            }
        }
    }

    #[inline]
    fn relax(&self, i: usize, iy: usize, iz: usize, b: &[f64], x: &mut [f64]) {
        let (ny, nz) = (self.ny, self.nz);
        let mut acc = b[i];
        if iy > 0 {
            acc += self.gy[iz * (ny - 1) + iy - 1] * x[i - 1];
        }
        if iy + 1 < ny {
            acc += self.gy[iz * (ny - 1) + iy] * x[i + 1];
        }
        if iz > 0 {
            acc += self.gz[(iz - 1) * ny + iy] * x[i - ny];
        }
        if iz + 1 < nz {
            acc += self.gz[iz * ny + iy] * x[i + ny];
        }
        x[i] = acc / self.diag[i];
    }

    fn gauss_seidel_forward(&self, b: &[f64], x: &mut [f64]) {
        for iz in 0..self.nz {
            for iy in 0..self.ny {
                let i = iz * self.ny + iy;
                if self.active[i] {
                    self.relax(i, iy, iz, b, x);
                }
            }
        }
    }

    fn gauss_seidel_backward(&self, b: &[f64], x: &mut [f64]) {
        for iz in (0..self.nz).rev() {
            for iy in (0..self.ny).rev() {
                let i = iz * self.ny + iy;
                if self.active[i] {
                    self.relax(i, iy, iz, b, x);
                }
            }
        }
    }

    fn coarsen(&self) -> Stencil {
        let (ny, nz) = (self.ny, self.nz);
        let (cy, cz) = (ny.div_ceil(2), nz.div_ceil(2));
        let mut c = Stencil::zeros(cy, cz);
        for iz in 0..nz {
            for iy in 0..ny {
                let i = iz * ny + iy;
                let ci = (iz / 2) * cy + iy / 2;
                if self.active[i] {
                    c.active[ci] = true;
                    c.diag[ci] += self.diag[i];
                }
                if iy + 1 < ny {
                    let g = self.gy[iz * (ny - 1) + iy];
                    if iy % 2 == 0 {
                        c.diag[ci] -= 2.0 * g;
                    } else {
                        c.gy[(iz / 2) * (cy - 1) + iy / 2] += g;
                    }
                }
                if iz + 1 < nz {
                    let g = self.gz[iz * ny + iy];
                    if iz % 2 == 0 {
                        c.diag[ci] -= 2.0 * g;
                    } else {
                        c.gz[(iz / 2) * cy + iy / 2] += g;
                    }
                }
            }
        }
        c
    }

    fn restrict(&self, fine: &[f64], coarse: &mut [f64]) {
        let cy = self.ny.div_ceil(2);
        coarse.iter_mut().for_each(|v| *v = 0.0);
        for iz in 0..self.nz {
            for iy in 0..self.ny {
                let i = iz * self.ny + iy;
                if self.active[i] {
                    coarse[(iz / 2) * cy + iy / 2] += fine[i];
                }
            }
        }
    }

    fn prolong_add(&self, coarse: &[f64], fine: &mut [f64]) {
        let cy = self.ny.div_ceil(2);
        for iz in 0..self.nz {
            for iy in 0..self.ny {
                let i = iz * self.ny + iy;
                if self.active[i] {
                    fine[i] += coarse[(iz / 2) * cy + iy / 2];
                }
            }
        }
    }
}

/// Dense Cholesky factor of the coarsest level, restricted to active cells.
#[derive(Debug, Clone)]
struct CoarseSolver {
    map: Vec<usize>,
    n: usize,
    l: Vec<f64>,
}

impl CoarseSolver {
    fn new(s: &Stencil) -> Option<Self> {
        let map: Vec<usize> = (0..s.len()).filter(|&i| s.active[i]).collect();
        let n = map.len();
        let mut index = vec![usize::MAX; s.len()];
        for (k, &i) in map.iter().enumerate() {
            index[i] = k;
        }
        let mut a = vec![0.0; n * n];
        for (k, &i) in map.iter().enumerate() {
            a[k * n + k] = s.diag[i];
            let (iy, iz) = (i % s.ny, i / s.ny);
            let mut link = |j: usize, g: f64| {
                if index[j] != usize::MAX {
                    a[k * n + index[j]] -= g;
                }
            };
            if iy + 1 < s.ny {
                link(i + 1, s.gy[iz * (s.ny - 1) + iy]);
            }
            if iy > 0 {
                link(i - 1, s.gy[iz * (s.ny - 1) + iy - 1]);
            }
            if iz + 1 < s.nz {
                link(i + s.ny, s.gz[iz * s.ny + iy]);
            }
            if iz > 0 {
                link(i - s.ny, s.gz[(iz - 1) * s.ny + iy]);
            }
        }
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            if d <= 0.0 {
                return None;
            }
            let d = d.sqrt();
            a[j * n + j] = d;
            for i in j + 1..n {
                let mut v = a[i * n + j];
                for k in 0..j {
                    v -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = v / d;
            }
        }
        Some(Self { map, n, l: a })
    }

    fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.map.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let mut v = y[i];
            for k in 0..i {
                v -= self.l[i * n + k] * y[k];
            }
            y[i] = v / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for k in i + 1..n {
                v -= self.l[k * n + i] * y[k];
            }
            y[i] = v / self.l[i * n + i];
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        for (k, &i) in self.map.iter().enumerate() {
            x[i] = y[k];
        }
    }
}

const COARSEST_CELLS: usize = 256;
const SMOOTHING_SWEEPS: usize = 2;

pub(crate) struct Hierarchy {
    levels: Vec<Stencil>,
    coarse: CoarseSolver,
}

impl Hierarchy {
    pub fn new(fine: Stencil) -> Option<Self> {
        let mut levels = vec![fine];
        loop {
            let last = levels.last().unwrap();
            if last.len() <= COARSEST_CELLS || (last.ny <= 2 && last.nz <= 2) {
                break;
            }
            let next = last.coarsen();
            levels.push(next);
        }
        let coarse = CoarseSolver::new(levels.last().unwrap())?;
        Some(Self { levels, coarse })
    }

    pub fn fine(&self) -> &Stencil {
        &self.levels[0]
    }

    fn vcycle(&self, level: usize, b: &[f64], x: &mut [f64]) {
        let s = &self.levels[level];
        if level + 1 == self.levels.len() {
            self.coarse.solve(b, x);
            return;
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..SMOOTHING_SWEEPS {
            s.gauss_seidel_forward(b, x);
        }
        let mut r = vec![0.0; s.len()];
        s.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let c = &self.levels[level + 1];
        let mut rc = vec![0.0; c.len()];
        s.restrict(&r, &mut rc);
        let mut ec = vec![0.0; c.len()];
        self.vcycle(level + 1, &rc, &mut ec);
        s.prolong_add(&ec, x);
        for _ in 0..SMOOTHING_SWEEPS {
            s.gauss_seidel_backward(b, x);
        }
    }

    /// Solves `A x = b` starting from zero. Returns `(x, relative residual, iterations)`;
    /// `Err` carries the same triple when `max_iter` is exhausted.
    #[allow(clippy::type_complexity)]
    pub fn pcg(
        &self,
        b: &[f64],
        tol: f64,
        max_iter: usize,
    ) -> Result<(Vec<f64>, f64, usize), (Vec<f64>, f64, usize)> {
        let a = self.fine();
        let n = a.len();
        let mut x = vec![0.0; n];
        let bnorm = norm(b);
        if bnorm == 0.0 {
            return Ok((x, 0.0, 0));
        }
        let mut r = b.to_vec();
        let mut z = vec![0.0; n];
        let mut ap = vec![0.0; n];
        let mut iterations = 0;
        // The recurrence residual drifts from the true one; restart from the true
        // residual until both agree on convergence.
        loop {
            self.vcycle(0, &r, &mut z);
            let mut p = z.clone();
            let mut rz = dot(&r, &z);
            let mut rel = norm(&r) / bnorm;
            while rel > tol && iterations < max_iter {
                a.apply(&p, &mut ap);
                let alpha = rz / dot(&p, &ap);
                for i in 0..n {
                    x[i] += alpha * p[i];
                    r[i] -= alpha * ap[i];
                }
                iterations += 1;
                rel = norm(&r) / bnorm;
                if rel <= tol {
                    break;
                }
                self.vcycle(0, &r, &mut z);
                let rz_next = dot(&r, &z);
                let beta = rz_next / rz;
                rz = rz_next;
                for i in 0..n {
                    p[i] = z[i] + beta * p[i];
                }
            }
            a.apply(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            let true_rel = norm(&r) / bnorm;
            if true_rel <= tol {
                return Ok((x, true_rel, iterations));
            }
            if iterations >= max_iter {
                return Err((x, true_rel, iterations));
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unit-conductance Laplacian with a grounded bottom face.
    fn poisson(ny: usize, nz: usize) -> Stencil {
        let mut s = Stencil::zeros(ny, nz);
        s.gy.iter_mut().for_each(|g| *g = 1.0);
        s.gz.iter_mut().for_each(|g| *g = 1.0);
        for iz in 0..nz {
            for iy in 0..ny {
                let i = iz * ny + iy;
                s.active[i] = true;
                let mut d = 0.0;
                if iy > 0 {
                    d += 1.0;
                }
                if iy + 1 < ny {
                    d += 1.0;
                }
                if iz > 0 {
                    d += 1.0;
                }
                if iz + 1 < nz {
                    d += 1.0;
                }
                if iz == 0 {
                    d += 2.0;
                }
                s.diag[i] = d;
            }
        }
        s
    }

    #[test]
    fn coarse_operator_is_galerkin_product() {
        let s = poisson(5, 3);
        let c = s.coarsen();
        // Compare P^T A P e_J against the coarse stencil column by column.
        for j in 0..c.len() {
            let mut ec = vec![0.0; c.len()];
            ec[j] = 1.0;
            let mut ef = vec![0.0; s.len()];
            s.prolong_add(&ec, &mut ef);
            let mut af = vec![0.0; s.len()];
            s.apply(&ef, &mut af);
            let mut pa = vec![0.0; c.len()];
            s.restrict(&af, &mut pa);
            let mut ac = vec![0.0; c.len()];
            c.apply(&ec, &mut ac);
            for k in 0..c.len() {
                assert!((pa[k] - ac[k]).abs() < 1e-12, "col {j} row {k}: {} vs {}", pa[k], ac[k]);
            }
        }
    }

    #[test]
    fn pcg_solves_poisson() {
        let s = poisson(97, 41);
        let n = s.len();
        let xs: Vec<f64> = (0..n).map(|i| ((i * 7919) % 113) as f64 / 113.0).collect();
        let mut b = vec![0.0; n];
        s.apply(&xs, &mut b);
        let h = Hierarchy::new(s).unwrap();
        let (x, rel, it) = h.pcg(&b, 1e-10, 500).unwrap();
        assert!(rel <= 1e-10);
        assert!(it < 60, "took {it} iterations");
        let err = x.iter().zip(&xs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "max error {err}");
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let h = Hierarchy::new(poisson(20, 20)).unwrap();
        let (x, rel, it) = h.pcg(&vec![0.0; 400], 1e-8, 10).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
        assert_eq!((rel, it), (0.0, 0));
    }
}
