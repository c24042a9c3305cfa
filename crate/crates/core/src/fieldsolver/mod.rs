//! Quasi-static 2D electrostatic solver for transmission-line cross-sections.
//!
//! Potentials live at cell centers of a uniform [`Grid2D`]. Each shared cell edge
//! carries the harmonic mean of the two cell permittivities. Conductor cells are
//! Dirichlet unknowns whose surface is the cell face, so a free cell couples to a
//! neighbouring conductor cell (or to the ground plane under the bottom row) over
//! half a cell. Left, right and top walls are zero-flux.
//!
//! Capacitance is extracted from the discrete field energy
//! `W = 1/2 eps0 sum_e g_e (dphi_e)^2`, which for this stencil is also the exact
//! discrete charge on the conductor.

mod multigrid;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use multigrid::{Hierarchy, Stencil};

/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;
/// Free-space delay of one inch, ps.
pub const PS_PER_INCH_VACUUM: f64 = 0.0254 / C_LIGHT * 1e12;
/// Metres per mil.
pub const METRES_PER_MIL: f64 = 25.4e-6;

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no conductors in raster")]
    NoConductors,
    #[error("expected {expected} conductors, found {found}")]
    ConductorCount { expected: usize, found: usize },
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("singular system: some region is not connected to any fixed potential")]
    Singular,
    #[error("solution does not match raster: {0}")]
    Mismatch(String),
    #[error("inconsistent capacitances: c = {c:e} < c0 = {c0:e}")]
    Inconsistent { c: f64, c0: f64 },
}

/// Uniform cell grid over the `(y, z)` cross-section, in mils. Cell `(iy, iz)`
/// is stored at `iz * ny + iy`; the ground plane is the `z = z0` face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub ny: usize,
    pub nz: usize,
    pub dy: f64,
    pub dz: f64,
    pub y0: f64,
    pub z0: f64,
}

impl Grid2D {
    pub fn new(ny: usize, nz: usize, dy: f64, dz: f64, y0: f64, z0: f64) -> Result<Self, SolverError> {
        let g = Self { ny, nz, dy, dz, y0, z0 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.ny < 8 || self.nz < 8 {
            return Err(SolverError::InvalidGrid(format!(
                "need at least 8x8 cells, got {}x{}",
                self.ny, self.nz
            )));
        }
        if !(self.dy > 0.0 && self.dz > 0.0 && self.dy.is_finite() && self.dz.is_finite()) {
            return Err(SolverError::InvalidGrid(format!(
                "spacing must be positive, got dy = {}, dz = {}",
                self.dy, self.dz
            )));
        }
        if !(self.y0.is_finite() && self.z0.is_finite()) {
            return Err(SolverError::InvalidGrid("origin must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn y_center(&self, iy: usize) -> f64 {
        self.y0 + (iy as f64 + 0.5) * self.dy
    }

    pub fn z_center(&self, iz: usize) -> f64 {
        self.z0 + (iz as f64 + 0.5) * self.dz
    }

    pub fn width(&self) -> f64 {
        self.ny as f64 * self.dy
    }

    pub fn height(&self) -> f64 {
        self.nz as f64 * self.dz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conductor {
    pub id: u32,
    pub cells: Vec<usize>,
}

/// Per-cell relative permittivity plus conductor masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DielectricRaster {
    grid: Grid2D,
    eps: Vec<f64>,
    conductors: Vec<Conductor>,
}

impl DielectricRaster {
    pub fn new(grid: Grid2D, eps: Vec<f64>) -> Result<Self, SolverError> {
        grid.validate()?;
        if eps.len() != grid.len() {
            return Err(SolverError::InvalidInput(format!(
                "eps has {} cells, grid has {}",
                eps.len(),
                grid.len()
            )));
        }
        if let Some(bad) = eps.iter().find(|e| !(**e >= 1.0 && e.is_finite())) {
            return Err(SolverError::InvalidInput(format!("permittivity {bad} < 1")));
        }
        Ok(Self {
            grid,
            eps,
            conductors: Vec::new(),
        })
    }

    pub fn uniform(grid: Grid2D, eps: f64) -> Result<Self, SolverError> {
        Self::new(grid, vec![eps; grid.len()])
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn eps_cell(&self, iy: usize, iz: usize) -> f64 {
        self.eps[iz * self.grid.ny + iy]
    }

    pub fn conductors(&self) -> &[Conductor] {
        &self.conductors
    }

    /// Copy with every permittivity set to 1 and the same conductors.
    pub fn vacuum(&self) -> Self {
        Self {
            grid: self.grid,
            eps: vec![1.0; self.eps.len()],
            conductors: self.conductors.clone(),
        }
    }

    /// Scales every permittivity by `k >= 1`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut r = self.clone();
        r.eps.iter_mut().for_each(|e| *e *= k);
        r
    }

    pub fn set_eps(&mut self, iy: usize, iz: usize, eps: f64) {
        assert!(eps >= 1.0);
        self.eps[iz * self.grid.ny + iy] = eps;
    }

    /// Adds a conductor made of every cell whose center lies in the rectangle.
    pub fn add_rect_conductor(
        &mut self,
        id: u32,
        y_lo: f64,
        y_hi: f64,
        z_lo: f64,
        z_hi: f64,
    ) -> Result<(), SolverError> {
        if self.conductors.iter().any(|c| c.id == id) {
            return Err(SolverError::InvalidInput(format!("duplicate conductor id {id}")));
        }
        let g = self.grid;
        let mut cells = Vec::new();
        for iz in 0..g.nz {
            let z = g.z_center(iz);
            if z < z_lo || z > z_hi {
                continue;
            }
            for iy in 0..g.ny {
                let y = g.y_center(iy);
                if y >= y_lo && y <= y_hi {
                    cells.push(iz * g.ny + iy);
                }
            }
        }
        if cells.is_empty() {
            return Err(SolverError::InvalidInput(format!(
                "conductor {id} covers no cell centers"
            )));
        }
        for other in &self.conductors {
            if cells.iter().any(|c| other.cells.binary_search(c).is_ok()) {
                return Err(SolverError::InvalidInput(format!(
                    "conductor {id} overlaps conductor {}",
                    other.id
                )));
            }
        }
        self.conductors.push(Conductor { id, cells });
        Ok(())
    }

    fn owner_map(&self) -> Vec<Option<usize>> {
        let mut owner = vec![None; self.grid.len()];
        for (k, c) in self.conductors.iter().enumerate() {
            for &i in &c.cells {
                owner[i] = Some(k);
            }
        }
        owner
    }
}

/// Conductor voltages, keyed by conductor id. Missing ids are held at 0 V.
pub type Excitation = BTreeMap<u32, f64>;

pub fn excite(id: u32, volts: f64) -> Excitation {
    BTreeMap::from([(id, volts)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    /// Cell-center potentials, volts; conductor cells carry their voltage.
    pub potential: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub excitation: Excitation,
    grid: Grid2D,
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Edge conductances of the full cross-section, including Dirichlet couplings.
/// `Fixed` cells belong to a conductor.
struct Edges<'a> {
    raster: &'a DielectricRaster,
    owner: Vec<Option<usize>>,
    ry: f64,
    rz: f64,
}

impl<'a> Edges<'a> {
    fn new(raster: &'a DielectricRaster) -> Self {
        let g = raster.grid;
        Self {
            raster,
            owner: raster.owner_map(),
            // Horizontal edge: face height dz over center distance dy.
            ry: g.dz / g.dy,
            rz: g.dy / g.dz,
        }
    }

    fn coupling(&self, i: usize, j: usize, ratio: f64) -> f64 {
        let eps = &self.raster.eps;
        match (self.owner[i], self.owner[j]) {
            (None, None) => harmonic(eps[i], eps[j]) * ratio,
            (None, Some(_)) => 2.0 * eps[i] * ratio,
            (Some(_), None) => 2.0 * eps[j] * ratio,
            (Some(a), Some(b)) if a == b => 0.0,
            (Some(_), Some(_)) => harmonic(eps[i], eps[j]) * ratio,
        }
    }

    fn ground(&self, i: usize) -> f64 {
        2.0 * self.raster.eps[i] * self.rz
    }

    /// Visits every edge once as `(cell, Some(neighbour) | None for ground, conductance)`.
    fn for_each(&self, mut f: impl FnMut(usize, Option<usize>, f64)) {
        let g = self.raster.grid;
        let ny = g.ny;
        for iz in 0..g.nz {
            for iy in 0..ny {
                let i = iz * ny + iy;
                if iy + 1 < ny {
                    f(i, Some(i + 1), self.coupling(i, i + 1, self.ry));
                }
                if iz + 1 < g.nz {
                    f(i, Some(i + ny), self.coupling(i, i + ny, self.rz));
                }
                if iz == 0 {
                    f(i, None, self.ground(i));
                }
            }
        }
    }

    /// `sum_e g_e dphi_a dphi_b`, the bilinear form behind the field energy.
    fn bilinear(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        self.for_each(|i, j, g| {
            let (da, db) = match j {
                Some(j) => (a[i] - a[j], b[i] - b[j]),
                None => (a[i], b[i]),
            };
            acc += g * da * db;
        });
        acc
    }
}

fn fixed_voltages(raster: &DielectricRaster, excitation: &Excitation) -> Vec<f64> {
    raster
        .conductors
        .iter()
        .map(|c| excitation.get(&c.id).copied().unwrap_or(0.0))
        .collect()
}

/// Builds the reduced system over free cells.
fn assemble(edges: &Edges, volts: &[f64]) -> (Stencil, Vec<f64>) {
    let g = edges.raster.grid;
    let (ny, nz) = (g.ny, g.nz);
    let mut s = Stencil::zeros(ny, nz);
    let mut b = vec![0.0; g.len()];
    for i in 0..g.len() {
        s.active[i] = edges.owner[i].is_none();
    }
    edges.for_each(|i, j, cond| match j {
        None => {
            if s.active[i] {
                s.diag[i] += cond;
            }
        }
        Some(j) => {
            let (iy, iz) = (i % ny, i / ny);
            match (edges.owner[i], edges.owner[j]) {
                (None, None) => {
                    s.diag[i] += cond;
                    s.diag[j] += cond;
                    if j == i + 1 {
                        s.gy[iz * (ny - 1) + iy] = cond;
                    } else {
                        s.gz[iz * ny + iy] = cond;
                    }
                }
                (None, Some(k)) => {
                    s.diag[i] += cond;
                    b[i] += cond * volts[k];
                }
                (Some(k), None) => {
                    s.diag[j] += cond;
                    b[j] += cond * volts[k];
                }
                _ => {}
            }
        }
    });
    (s, b)
}

pub fn default_max_iter(grid: &Grid2D) -> usize {
    200 * grid.ny.max(grid.nz)
}

/// Solves `div(eps grad phi) = 0` with the given conductor voltages.
pub fn solve_laplace(
    raster: &DielectricRaster,
    excitation: &Excitation,
    tol: f64,
    max_iter: usize,
) -> Result<FieldSolution, SolverError> {
    if raster.conductors.is_empty() {
        return Err(SolverError::NoConductors);
    }
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(SolverError::InvalidInput(format!("tolerance {tol} outside (0, 1e-3]")));
    }
    let edges = Edges::new(raster);
    let volts = fixed_voltages(raster, excitation);
    let (stencil, b) = assemble(&edges, &volts);
    let hierarchy = Hierarchy::new(stencil).ok_or(SolverError::Singular)?;
    let (mut phi, residual, iterations) = match hierarchy.pcg(&b, tol, max_iter) {
        Ok(v) => v,
        Err((_, residual, iterations)) => {
            return Err(SolverError::NotConverged {
                iterations,
                residual,
            })
        }
    };
    for (c, v) in raster.conductors.iter().zip(&volts) {
        for &i in &c.cells {
            phi[i] = *v;
        }
    }
    Ok(FieldSolution {
        potential: phi,
        residual,
        iterations,
        excitation: raster
            .conductors
            .iter()
            .zip(&volts)
            .map(|(c, v)| (c.id, *v))
            .collect(),
        grid: raster.grid,
    })
}

fn check_unit_excitation(
    solution: &FieldSolution,
    raster: &DielectricRaster,
    conductor: u32,
) -> Result<(), SolverError> {
    if solution.grid != raster.grid || solution.potential.len() != raster.grid.len() {
        return Err(SolverError::Mismatch("grid differs".into()));
    }
    if !raster.conductors.iter().any(|c| c.id == conductor) {
        return Err(SolverError::Mismatch(format!("no conductor {conductor}")));
    }
    for (id, v) in &solution.excitation {
        let expect = if *id == conductor { 1.0 } else { 0.0 };
        if *v != expect {
            return Err(SolverError::Mismatch(format!(
                "conductor {id} at {v} V, expected {expect} V"
            )));
        }
    }
    Ok(())
}

/// Per-unit-length capacitance `2 W / V^2` from the discrete field energy, F/m.
pub fn capacitance(
    solution: &FieldSolution,
    raster: &DielectricRaster,
    conductor: u32,
) -> Result<f64, SolverError> {
    check_unit_excitation(solution, raster, conductor)?;
    let edges = Edges::new(raster);
    let phi = &solution.potential;
    Ok(EPS0 * edges.bilinear(phi, phi))
}

/// Charge on `conductor` from the net flux leaving a rectangle that encloses it
/// with `margin` cells of clearance (clipped to the domain), F/m at 1 V.
pub fn gauss_capacitance(
    solution: &FieldSolution,
    raster: &DielectricRaster,
    conductor: u32,
    margin: usize,
) -> Result<f64, SolverError> {
    check_unit_excitation(solution, raster, conductor)?;
    let g = raster.grid;
    let cond = raster.conductors.iter().find(|c| c.id == conductor).unwrap();
    let (mut y_lo, mut y_hi, mut z_lo, mut z_hi) = (usize::MAX, 0, usize::MAX, 0);
    for &i in &cond.cells {
        let (iy, iz) = (i % g.ny, i / g.ny);
        y_lo = y_lo.min(iy);
        y_hi = y_hi.max(iy);
        z_lo = z_lo.min(iz);
        z_hi = z_hi.max(iz);
    }
    let y_lo = y_lo.saturating_sub(margin);
    let z_lo = z_lo.saturating_sub(margin);
    let y_hi = (y_hi + margin).min(g.ny - 1);
    let z_hi = (z_hi + margin).min(g.nz - 1);
    let inside = |i: usize| {
        let (iy, iz) = (i % g.ny, i / g.ny);
        (y_lo..=y_hi).contains(&iy) && (z_lo..=z_hi).contains(&iz)
    };
    let owner = raster.owner_map();
    let own = raster.conductors.iter().position(|c| c.id == conductor).unwrap();
    for (i, o) in owner.iter().enumerate() {
        if let Some(k) = o {
            if *k != own && inside(i) {
                return Err(SolverError::InvalidInput(
                    "gauss box encloses another conductor".into(),
                ));
            }
        }
    }
    let edges = Edges::new(raster);
    let phi = &solution.potential;
    let mut q = 0.0;
    edges.for_each(|i, j, cond| match j {
        None => {
            if inside(i) {
                q += cond * phi[i];
            }
        }
        Some(j) => match (inside(i), inside(j)) {
            (true, false) => q += cond * (phi[i] - phi[j]),
            (false, true) => q += cond * (phi[j] - phi[i]),
            _ => {}
        },
    });
    Ok(EPS0 * q)
}

/// Maxwell capacitance matrix of a two-conductor raster, F/m. Entry `(i, j)` is
/// the bilinear energy form of the unit solutions of conductors `i` and `j`.
pub fn capacitance_matrix(
    raster: &DielectricRaster,
    tol: f64,
    max_iter: usize,
) -> Result<[[f64; 2]; 2], SolverError> {
    let ids: Vec<u32> = raster.conductors.iter().map(|c| c.id).collect();
    if ids.len() != 2 {
        return Err(SolverError::ConductorCount {
            expected: 2,
            found: ids.len(),
        });
    }
    let s0 = solve_laplace(raster, &excite(ids[0], 1.0), tol, max_iter)?;
    let s1 = solve_laplace(raster, &excite(ids[1], 1.0), tol, max_iter)?;
    let edges = Edges::new(raster);
    let (p0, p1) = (&s0.potential, &s1.potential);
    let c00 = EPS0 * edges.bilinear(p0, p0);
    let c11 = EPS0 * edges.bilinear(p1, p1);
    let c01 = EPS0 * edges.bilinear(p0, p1);
    let c10 = EPS0 * edges.bilinear(p1, p0);
    Ok([[c00, c01], [c10, c11]])
}

/// Single-conductor capacitance at 1 V.
pub fn self_capacitance(
    raster: &DielectricRaster,
    conductor: u32,
    tol: f64,
    max_iter: usize,
) -> Result<f64, SolverError> {
    let sol = solve_laplace(raster, &excite(conductor, 1.0), tol, max_iter)?;
    capacitance(&sol, raster, conductor)
}

/// Quasi-static line parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    pub c: f64,
    pub c0: f64,
    pub eps_eff: f64,
    /// ps/inch
    pub delay: f64,
    /// ohm
    pub z0: f64,
}

pub fn effective_params(c: f64, c0: f64) -> Result<LineParams, SolverError> {
    if !(c0 > 0.0 && c.is_finite() && c0.is_finite()) {
        return Err(SolverError::InvalidInput(format!("need c0 > 0, got {c0}")));
    }
    // Solver tolerance allows c to sit a hair under c0 for an all-vacuum raster.
    if c < c0 * (1.0 - 1e-7) {
        return Err(SolverError::Inconsistent { c, c0 });
    }
    let eps_eff = (c / c0).max(1.0);
    Ok(LineParams {
        c,
        c0,
        eps_eff,
        delay: eps_eff.sqrt() * PS_PER_INCH_VACUUM,
        z0: 1.0 / (C_LIGHT * (c * c0).sqrt()),
    })
}

/// Even/odd mode impedances of a symmetric coupled pair from its loaded and
/// vacuum Maxwell matrices. Returns `(z_odd, z_even)` in ohm.
pub fn pair_mode_impedances(c: &[[f64; 2]; 2], c0: &[[f64; 2]; 2]) -> (f64, f64) {
    let odd = c[0][0] - c[0][1];
    let odd0 = c0[0][0] - c0[0][1];
    let even = c[0][0] + c[0][1];
    let even0 = c0[0][0] + c0[0][1];
    (
        1.0 / (C_LIGHT * (odd * odd0).sqrt()),
        1.0 / (C_LIGHT * (even * even0).sqrt()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(ny: usize, nz: usize, d: f64) -> Grid2D {
        Grid2D::new(ny, nz, d, d, 0.0, 0.0).unwrap()
    }

    /// Full-width sheet from z = h to z = h + t inside a taller box.
    fn parallel_plate(eps: f64) -> DielectricRaster {
        let g = grid(40, 40, 0.25);
        let mut r = DielectricRaster::uniform(g, eps).unwrap();
        r.add_rect_conductor(1, 0.0, 10.0, 4.0, 4.75).unwrap();
        r
    }

    fn microstrip(w: f64, h: f64, eps_r: f64, d: f64) -> DielectricRaster {
        let margin = 8.0 * h;
        let ny = ((w + 2.0 * margin) / d).round() as usize;
        let nz = (10.0 * h / d).round() as usize;
        let g = Grid2D::new(ny, nz, d, d, -(w / 2.0 + margin), 0.0).unwrap();
        let mut eps = vec![1.0; g.len()];
        for iz in 0..g.nz {
            if g.z_center(iz) < h {
                for iy in 0..g.ny {
                    eps[iz * g.ny + iy] = eps_r;
                }
            }
        }
        let mut r = DielectricRaster::new(g, eps).unwrap();
        r.add_rect_conductor(1, -w / 2.0, w / 2.0, h, h + d).unwrap();
        r
    }

    #[test]
    fn parallel_plate_is_exact() {
        let r = parallel_plate(4.0);
        let c = self_capacitance(&r, 1, 1e-10, 10_000).unwrap();
        let b = 10.0;
        let expect = EPS0 * 4.0 * b / 4.0;
        assert!((c - expect).abs() / expect < 1e-8, "{c} vs {expect}");
    }

    #[test]
    fn linear_potential_ramp() {
        let r = parallel_plate(2.5);
        let s = solve_laplace(&r, &excite(1, 1.0), 1e-10, 10_000).unwrap();
        let g = r.grid();
        for iz in 0..16 {
            for iy in 0..g.ny {
                let expect = g.z_center(iz) / 4.0;
                assert!((s.potential[iz * g.ny + iy] - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_excitation_gives_zero_field() {
        let r = parallel_plate(3.0);
        let s = solve_laplace(&r, &excite(1, 0.0), 1e-8, 100).unwrap();
        assert!(s.potential.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn no_conductor_is_an_error() {
        let r = DielectricRaster::uniform(grid(10, 10, 1.0), 1.0).unwrap();
        assert_eq!(
            solve_laplace(&r, &Excitation::new(), 1e-8, 10).unwrap_err(),
            SolverError::NoConductors
        );
    }

    #[test]
    fn non_convergence_reports_residual() {
        let r = microstrip(4.0, 4.0, 4.0, 0.25);
        match solve_laplace(&r, &excite(1, 1.0), 1e-12, 1) {
            Err(SolverError::NotConverged { iterations, residual }) => {
                assert!(iterations >= 1);
                assert!(residual > 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn doubling_eps_doubles_c() {
        let r = microstrip(4.0, 4.0, 4.0, 0.5);
        let c1 = self_capacitance(&r, 1, 1e-10, 10_000).unwrap();
        let c2 = self_capacitance(&r.scaled(2.0), 1, 1e-10, 10_000).unwrap();
        assert!((c2 / c1 - 2.0).abs() < 1e-8);
    }

    #[test]
    fn energy_and_gauss_agree() {
        let r = microstrip(4.0, 4.0, 4.0, 0.25);
        let s = solve_laplace(&r, &excite(1, 1.0), 1e-8, 20_000).unwrap();
        let ce = capacitance(&s, &r, 1).unwrap();
        for margin in [1, 3, 8] {
            let cq = gauss_capacitance(&s, &r, 1, margin).unwrap();
            assert!((ce - cq).abs() / ce < 0.01, "margin {margin}: {ce} vs {cq}");
        }
    }

    #[test]
    fn capacitance_needs_unit_excitation() {
        let r = parallel_plate(2.0);
        let s = solve_laplace(&r, &excite(1, 2.0), 1e-8, 1000).unwrap();
        assert!(matches!(capacitance(&s, &r, 1), Err(SolverError::Mismatch(_))));
    }

    #[test]
    fn effective_params_free_space_and_quarter() {
        let p = effective_params(1e-10, 1e-10).unwrap();
        assert_eq!(p.eps_eff, 1.0);
        assert!((p.delay - 84.7253).abs() < 1e-3);
        let p = effective_params(4e-10, 1e-10).unwrap();
        assert_eq!(p.eps_eff, 4.0);
        assert!((p.delay - 169.4506).abs() < 1e-3);
        assert!(matches!(
            effective_params(0.5e-10, 1e-10),
            Err(SolverError::Inconsistent { .. })
        ));
    }

    #[test]
    fn matrix_symmetric_and_signed() {
        let g = Grid2D::new(120, 60, 0.25, 0.25, -15.0, 0.0).unwrap();
        let mut eps = vec![1.0; g.len()];
        for iz in 0..16 {
            for iy in 0..g.ny {
                eps[iz * g.ny + iy] = 4.0;
            }
        }
        let mut r = DielectricRaster::new(g, eps).unwrap();
        r.add_rect_conductor(1, -6.0, -2.0, 4.0, 4.75).unwrap();
        r.add_rect_conductor(2, 2.0, 6.0, 4.0, 4.75).unwrap();
        let m = capacitance_matrix(&r, 1e-10, 20_000).unwrap();
        assert!((m[0][0] - m[1][1]).abs() / m[0][0] < 1e-6);
        assert!((m[0][1] - m[1][0]).abs() / m[0][1].abs() < 1e-6);
        assert!(m[0][1] <= 0.0);
        assert!(m[0][0] >= m[0][1].abs());

        let m0 = capacitance_matrix(&r.vacuum(), 1e-10, 20_000).unwrap();
        let (z_odd, z_even) = pair_mode_impedances(&m, &m0);
        assert!(z_odd < z_even);
    }

    #[test]
    fn distant_traces_decouple() {
        let g = Grid2D::new(400, 60, 0.25, 0.25, -50.0, 0.0).unwrap();
        let mut r = DielectricRaster::uniform(g, 1.0).unwrap();
        r.add_rect_conductor(1, -25.0, -21.0, 4.0, 4.75).unwrap();
        r.add_rect_conductor(2, 21.0, 25.0, 4.0, 4.75).unwrap();
        let m = capacitance_matrix(&r, 1e-10, 20_000).unwrap();
        assert!(m[0][1].abs() / m[0][0] < 0.01, "{m:?}");
    }

    #[test]
    fn c0_ignores_dielectric() {
        let r = microstrip(4.0, 4.0, 4.0, 0.5);
        let other = r.scaled(1.7);
        let a = self_capacitance(&r.vacuum(), 1, 1e-10, 10_000).unwrap();
        let b = self_capacitance(&other.vacuum(), 1, 1e-10, 10_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn raising_one_cell_never_lowers_c() {
        use rand::{Rng, SeedableRng};
        let base = microstrip(2.0, 2.0, 3.0, 0.25);
        let c_base = self_capacitance(&base, 1, 1e-11, 20_000).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = *base.grid();
        for _ in 0..20 {
            let mut r = base.clone();
            let iy = rng.gen_range(0..g.ny);
            let iz = rng.gen_range(0..g.nz);
            let e = r.eps_cell(iy, iz);
            r.set_eps(iy, iz, e * rng.gen_range(1.5..4.0));
            let c = self_capacitance(&r, 1, 1e-11, 20_000).unwrap();
            assert!(c >= c_base * (1.0 - 1e-9), "cell ({iy},{iz}): {c} < {c_base}");
        }
    }
}
