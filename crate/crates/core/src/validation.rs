//! Solver trust anchors: parallel-plate exactness, microstrip against the
//! Hammerstad–Jensen closed form, and grid self-convergence.

use serde::Serialize;

use crate::fieldsolver::{
    effective_params, self_capacitance, DielectricRaster, Grid2D, LineParams, SolverError,
    DEFAULT_TOL, EPS0,
};

/// Free-space wave impedance, ohm.
const ETA0: f64 = 376.730_313_668;

fn hj_z01(u: f64) -> f64 {
    use std::f64::consts::PI;
    let f = 6.0 + (2.0 * PI - 6.0) * (-(30.666 / u).powf(0.7528)).exp();
    ETA0 / (2.0 * PI) * (f / u + (1.0 + 4.0 / (u * u)).sqrt()).ln()
}

fn hj_eps_eff(u: f64, eps_r: f64) -> f64 {
    let a = 1.0
        + ((u.powi(4) + (u / 52.0).powi(2)) / (u.powi(4) + 0.432)).ln() / 49.0
        + (1.0 + (u / 18.1).powi(3)).ln() / 18.7;
    let b = 0.564 * ((eps_r - 0.9) / (eps_r + 3.0)).powf(0.053);
    (eps_r + 1.0) / 2.0 + (eps_r - 1.0) / 2.0 * (1.0 + 10.0 / u).powf(-a * b)
}

/// Hammerstad–Jensen microstrip `(eps_eff, z0)` for width ratio `u = w/h` and
/// normalized strip thickness `t/h` (0 for an infinitely thin strip).
pub fn hammerstad_jensen(u: f64, eps_r: f64, t_over_h: f64) -> (f64, f64) {
    if t_over_h <= 0.0 {
        let e = hj_eps_eff(u, eps_r);
        return (e, hj_z01(u) / e.sqrt());
    }
    use std::f64::consts::E;
    let t = t_over_h;
    let coth = 1.0 / (6.517 * u).sqrt().tanh();
    let du1 = t / std::f64::consts::PI * (1.0 + 4.0 * E / (t * coth * coth)).ln();
    let dur = 0.5 * (1.0 + 1.0 / (eps_r - 1.0).sqrt().cosh()) * du1;
    let (u1, ur) = (u + du1, u + dur);
    let e_r = hj_eps_eff(ur, eps_r);
    let z0 = hj_z01(ur) / e_r.sqrt();
    let eps_eff = e_r * (hj_z01(u1) / hj_z01(ur)).powi(2);
    (eps_eff, z0)
}

/// Cross-section of a single strip of width `w` and thickness `t` on a uniform
/// substrate of height `h`, centered at `y = 0`, with `margin` mils of clearance
/// to each side wall and the top wall at `top` mils.
pub fn microstrip_raster(
    w: f64,
    h: f64,
    t: f64,
    eps_r: f64,
    spacing: f64,
    margin: f64,
    top: f64,
) -> Result<DielectricRaster, SolverError> {
    let ny = ((w + 2.0 * margin) / spacing).round() as usize;
    let nz = (top / spacing).round() as usize;
    let grid = Grid2D::new(ny, nz, spacing, spacing, -(ny as f64) * spacing / 2.0, 0.0)?;
    let eps = (0..grid.len())
        .map(|i| if grid.z_center(i / ny) < h { eps_r } else { 1.0 })
        .collect();
    let mut r = DielectricRaster::new(grid, eps)?;
    r.add_rect_conductor(1, -w / 2.0, w / 2.0, h, h + t)?;
    Ok(r)
}

pub fn line_params(raster: &DielectricRaster) -> Result<LineParams, SolverError> {
    let max_iter = crate::fieldsolver::default_max_iter(raster.grid());
    let c = self_capacitance(raster, 1, DEFAULT_TOL, max_iter)?;
    let c0 = self_capacitance(&raster.vacuum(), 1, DEFAULT_TOL, max_iter)?;
    effective_params(c, c0)
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CaseResult {
    fn new(name: String, value: f64, reference: f64, tolerance: f64) -> Self {
        let rel_error = (value - reference).abs() / reference.abs();
        Self {
            name,
            value,
            reference,
            rel_error,
            tolerance,
            passed: rel_error <= tolerance,
        }
    }
}

/// Substrate height used by the microstrip cases, mil.
pub const VALIDATION_H: f64 = 4.0;
pub const VALIDATION_SPACING: f64 = 0.125;
pub const WIDTH_RATIOS: [f64; 3] = [0.5, 1.0, 2.0];
pub const PERMITTIVITIES: [f64; 3] = [2.2, 4.0, 6.0];
pub const EPS_EFF_TOL: f64 = 0.03;
pub const Z0_TOL: f64 = 0.05;
pub const PLATE_TOL: f64 = 0.005;
pub const CONVERGENCE_TOL: f64 = 0.005;

/// Full-width plate of width `b` at height `h` over ground in a uniform dielectric.
pub fn parallel_plate_case(eps_r: f64) -> Result<CaseResult, SolverError> {
    let (b, h, d) = (10.0, 4.0, 0.25);
    let grid = Grid2D::new((b / d) as usize, (3.0 * h / d) as usize, d, d, 0.0, 0.0)?;
    let mut r = DielectricRaster::uniform(grid, eps_r)?;
    r.add_rect_conductor(1, 0.0, b, h, h + 1.0)?;
    let c = self_capacitance(&r, 1, DEFAULT_TOL, crate::fieldsolver::default_max_iter(&grid))?;
    // Per-unit-length capacitance is dimensionless in b/h, so mils cancel.
    let reference = EPS0 * eps_r * b / h;
    Ok(CaseResult::new(
        format!("parallel plate eps_r={eps_r}: C (F/m)"),
        c,
        reference,
        PLATE_TOL,
    ))
}

/// Strip of thickness one grid cell, compared with the thickness-corrected closed form.
pub fn microstrip_cases(u: f64, eps_r: f64) -> Result<[CaseResult; 2], SolverError> {
    let h = VALIDATION_H;
    let d = VALIDATION_SPACING;
    let t = d;
    let w = u * h;
    let r = microstrip_raster(w, h, t, eps_r, d, 10.0 * h, 12.0 * h)?;
    let p = line_params(&r)?;
    let (e_ref, z_ref) = hammerstad_jensen(u, eps_r, t / h);
    Ok([
        CaseResult::new(format!("microstrip w/h={u} eps_r={eps_r}: eps_eff"), p.eps_eff, e_ref, EPS_EFF_TOL),
        CaseResult::new(format!("microstrip w/h={u} eps_r={eps_r}: z0"), p.z0, z_ref, Z0_TOL),
    ])
}

/// Delay of a `w/h = 1`, `eps_r = 4` microstrip at spacing 0.25 against 0.125 mil.
pub fn grid_convergence_case() -> Result<CaseResult, SolverError> {
    let h = VALIDATION_H;
    let delay = |d: f64| -> Result<f64, SolverError> {
        let r = microstrip_raster(h, h, 0.75, 4.0, d, 6.0 * h, 10.0 * h)?;
        Ok(line_params(&r)?.delay)
    };
    let coarse = delay(0.25)?;
    let fine = delay(0.125)?;
    Ok(CaseResult::new(
        "grid halving w/h=1 eps_r=4: delay (ps/inch)".into(),
        coarse,
        fine,
        CONVERGENCE_TOL,
    ))
}

/// Runs the whole built-in suite in a fixed order.
pub fn run_suite() -> Result<Vec<CaseResult>, SolverError> {
    let mut out = Vec::new();
    for eps_r in [1.0, 4.0] {
        out.push(parallel_plate_case(eps_r)?);
    }
    for &u in &WIDTH_RATIOS {
        for &e in &PERMITTIVITIES {
            out.extend(microstrip_cases(u, e)?);
        }
    }
    out.push(grid_convergence_case()?);
    Ok(out)
}
