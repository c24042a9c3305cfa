//! Offset sweeps: per-unit-length delay, impedance and differential skew versus
//! the transverse trace position over the laminate.
//!
//! One longitudinal lattice period is cut into `n_slices` equal slabs. The
//! cross-section only changes at fill-bundle edges, so each slab is split there
//! and its delay is the length-weighted mean of the pieces, which makes the slab
//! average exact rather than a midpoint sample. Cross-sections with identical content are
//! solved once: the solve memo is keyed by a hash of the raster content, not of
//! its position, so a vacuum solve is shared by every offset and slice.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fieldsolver::{
    default_max_iter, effective_params, self_capacitance, DielectricRaster, Grid2D, SolverError,
    DEFAULT_TOL,
};
use crate::lattice::{LatticeError, LatticeModel, TraceKind, TraceLayout};
use crate::numfmt::sig;
use crate::par::{self, Parallelism};

pub const SINGLE_CSV_HEADER: &str = "offset_mil,delay_ps_per_in,z0_ohm";
pub const DIFF_CSV_HEADER: &str = "offset_mil,skew_ps_per_in,delay_left,delay_right";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Cell size in both directions, mil.
    pub spacing: f64,
    /// Clearance from each trace edge to the side walls, in lattice periods `y3`.
    pub lateral_periods: f64,
    /// Height of the top wall in multiples of the laminate thickness.
    pub top_factor: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            spacing: 0.25,
            lateral_periods: 3.0,
            top_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub offsets: Vec<f64>,
    pub n_slices: usize,
    pub grid: GridSpec,
    pub tol: f64,
    /// `None` selects `200 * max(ny, nz)`.
    pub max_iter: Option<usize>,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            offsets: offset_range(-12.0, 12.0, 1.0).unwrap(),
            n_slices: 8,
            grid: GridSpec::default(),
            tol: DEFAULT_TOL,
            max_iter: None,
            parallelism: Parallelism::default(),
        }
    }
}

/// `min, min + step, ...` up to and including `max` (with a small slack for rounding).
pub fn offset_range(min: f64, max: f64, step: f64) -> Result<Vec<f64>, SweepError> {
    if !(step > 0.0 && min.is_finite() && max.is_finite() && max >= min) {
        return Err(SweepError::Config(format!(
            "bad offset range {min}:{max}:{step}"
        )));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| min + k as f64 * step).collect())
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.offsets.is_empty() {
            return Err(SweepError::Config("no offsets".into()));
        }
        if self.offsets.iter().any(|o| !o.is_finite()) {
            return Err(SweepError::Config("offsets must be finite".into()));
        }
        if self.n_slices == 0 {
            return Err(SweepError::Config("n_slices must be >= 1".into()));
        }
        let g = &self.grid;
        if !(g.spacing > 0.0 && g.lateral_periods > 0.0 && g.top_factor > 1.0) {
            return Err(SweepError::Config(format!("bad grid spec {g:?}")));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-3) {
            return Err(SweepError::Config(format!("tolerance {} outside (0, 1e-3]", self.tol)));
        }
        Ok(())
    }

    /// Longitudinal slice positions `(k + 1/2) x3 / n`.
    pub fn slice_positions(&self, x3: f64) -> Vec<f64> {
        let n = self.n_slices as f64;
        (0..self.n_slices).map(|k| (k as f64 + 0.5) * x3 / n).collect()
    }

    /// Slabs `[k x3 / n, (k + 1) x3 / n)` centered on the slice positions.
    pub fn slice_slabs(&self, x3: f64) -> Vec<(f64, f64)> {
        let n = self.n_slices as f64;
        (0..self.n_slices)
            .map(|k| (k as f64 * x3 / n, (k + 1) as f64 * x3 / n))
            .collect()
    }
}

/// Rows that completed before a failure.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialRows {
    pub header: &'static str,
    pub rows: Vec<Vec<f64>>,
}

impl PartialRows {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", self.header);
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| sig(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("solve failed for trace at {center} mil, slice {slice}: {source}")]
    Solver {
        center: f64,
        slice: usize,
        source: SolverError,
        partial: PartialRows,
    },
}

impl SweepError {
    pub fn partial(&self) -> Option<&PartialRows> {
        match self {
            SweepError::Solver { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

/// Line parameters of one trace position, aggregated over the slices.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceResult {
    pub center: f64,
    /// Mean of the per-slice delays, ps/inch.
    pub delay: f64,
    /// Mean of the per-slice impedances, ohm.
    pub z0: f64,
    pub z0_min: f64,
    pub z0_max: f64,
    /// Length-weighted mean delay of each slab.
    pub slice_delays: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayProfile {
    pub style: String,
    pub w: f64,
    pub offsets: Vec<f64>,
    pub delay: Vec<f64>,
    pub z0: Vec<f64>,
    pub z0_min: Vec<f64>,
    pub z0_max: Vec<f64>,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewProfile {
    pub style: String,
    pub w: f64,
    pub s: f64,
    pub offsets: Vec<f64>,
    /// `delay_left - delay_right`, ps/inch.
    pub skew: Vec<f64>,
    pub delay_left: Vec<f64>,
    pub delay_right: Vec<f64>,
    pub period: f64,
}

fn csv_rows(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = format!("{header}\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| sig(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses a CSV with the given header into numeric columns.
pub fn parse_csv(text: &str, header: &str) -> Result<Vec<Vec<f64>>, String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == header => {}
        Some(h) => return Err(format!("unexpected header {h:?}, expected {header:?}")),
        None => return Err("empty file".into()),
    }
    let width = header.split(',').count();
    let mut cols = vec![Vec::new(); width];
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != width {
            return Err(format!("row {}: expected {width} fields", n + 1));
        }
        for (c, cell) in cols.iter_mut().zip(cells) {
            c.push(
                cell.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("row {}: {e}", n + 1))?,
            );
        }
    }
    Ok(cols)
}

impl DelayProfile {
    pub fn to_csv(&self) -> String {
        csv_rows(
            SINGLE_CSV_HEADER,
            (0..self.offsets.len()).map(|i| vec![self.offsets[i], self.delay[i], self.z0[i]]),
        )
    }

    /// Rebuilds a profile from its CSV; impedance extrema default to the mean.
    pub fn from_csv(text: &str, style: &str, w: f64, period: f64) -> Result<Self, String> {
        let cols = parse_csv(text, SINGLE_CSV_HEADER)?;
        Ok(Self {
            style: style.into(),
            w,
            offsets: cols[0].clone(),
            delay: cols[1].clone(),
            z0: cols[2].clone(),
            z0_min: cols[2].clone(),
            z0_max: cols[2].clone(),
            period,
        })
    }
}

impl SkewProfile {
    pub fn to_csv(&self) -> String {
        csv_rows(
            DIFF_CSV_HEADER,
            (0..self.offsets.len()).map(|i| {
                vec![
                    self.offsets[i],
                    self.skew[i],
                    self.delay_left[i],
                    self.delay_right[i],
                ]
            }),
        )
    }

    pub fn from_csv(text: &str, style: &str, w: f64, s: f64, period: f64) -> Result<Self, String> {
        let cols = parse_csv(text, DIFF_CSV_HEADER)?;
        Ok(Self {
            style: style.into(),
            w,
            s,
            offsets: cols[0].clone(),
            skew: cols[1].clone(),
            delay_left: cols[2].clone(),
            delay_right: cols[3].clone(),
            period,
        })
    }
}

type RasterKey = [u8; 32];

/// Hash of everything that determines the capacitance of a raster. The grid
/// origin is excluded: the solution is invariant under translation.
fn raster_key(r: &DielectricRaster) -> RasterKey {
    let mut h = Sha256::new();
    let g = r.grid();
    h.update((g.ny as u64).to_le_bytes());
    h.update((g.nz as u64).to_le_bytes());
    h.update(g.dy.to_bits().to_le_bytes());
    h.update(g.dz.to_bits().to_le_bytes());
    for e in r.eps() {
        h.update(e.to_bits().to_le_bytes());
    }
    for c in r.conductors() {
        h.update(c.id.to_le_bytes());
        h.update((c.cells.len() as u64).to_le_bytes());
        for &i in &c.cells {
            h.update((i as u64).to_le_bytes());
        }
    }
    h.finalize().into()
}

/// Sweep driver for one lattice model. Holds a memo of solved rasters so that
/// repeated trace positions (single and differential sweeps, hill and valley
/// probes) are solved once.
pub struct Sweeper {
    model: LatticeModel,
    cfg: SweepConfig,
    memo: Mutex<HashMap<RasterKey, f64>>,
}

const TRACE_ID: u32 = 1;

impl Sweeper {
    pub fn new(model: LatticeModel, cfg: SweepConfig) -> Result<Self, SweepError> {
        cfg.validate()?;
        Ok(Self {
            model,
            cfg,
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn model(&self) -> &LatticeModel {
        &self.model
    }

    pub fn config(&self) -> &SweepConfig {
        &self.cfg
    }

    /// Number of distinct rasters solved so far.
    pub fn solves(&self) -> usize {
        self.memo.lock().unwrap().len()
    }

    fn check_snapped(&self, w: f64) -> Result<(), SweepError> {
        let d = self.cfg.grid.spacing;
        let lam = &self.model.laminate;
        for (name, v) in [("w", w), ("t", lam.t), ("h", lam.h)] {
            let k = v / d;
            if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
                return Err(SweepError::Config(format!(
                    "{name} = {v} mil is not a multiple of the grid spacing {d} mil"
                )));
            }
        }
        Ok(())
    }

    /// Solver grid for a trace of width `w` centered at `center`.
    pub fn trace_grid(&self, w: f64, center: f64) -> Result<Grid2D, SolverError> {
        let g = &self.cfg.grid;
        let d = g.spacing;
        let margin_cells = (g.lateral_periods * self.model.style.y3 / d - 1e-9).ceil() as usize;
        let w_cells = (w / d).round() as usize;
        let ny = w_cells + 2 * margin_cells;
        let nz = (g.top_factor * self.model.laminate.h / d).round() as usize;
        Grid2D::new(ny, nz, d, d, center - w / 2.0 - margin_cells as f64 * d, 0.0)
    }

    /// Loaded raster of the cross-section at longitudinal position `x`.
    pub fn trace_raster(&self, w: f64, center: f64, x: f64) -> Result<DielectricRaster, SolverError> {
        let grid = self.trace_grid(w, center)?;
        let mut r = self.model.raster_slice(x, grid)?;
        let h = self.model.laminate.h;
        r.add_rect_conductor(TRACE_ID, center - w / 2.0, center + w / 2.0, h, h + self.model.laminate.t)?;
        Ok(r)
    }

    fn solve_unique(&self, jobs: Vec<(RasterKey, DielectricRaster)>) -> HashMap<RasterKey, Result<f64, SolverError>> {
        let tol = self.cfg.tol;
        let max_iter = self.cfg.max_iter;
        let results = par::map(self.cfg.parallelism, &jobs, |(_, r)| {
            let it = max_iter.unwrap_or_else(|| default_max_iter(r.grid()));
            self_capacitance(r, TRACE_ID, tol, it)
        });
        let mut memo = self.memo.lock().unwrap();
        let mut out = HashMap::new();
        for ((key, _), res) in jobs.into_iter().zip(results) {
            if let Ok(c) = &res {
                memo.insert(key, *c);
            }
            out.insert(key, res);
        }
        out
    }

    /// Solves every trace position, sharing identical cross-sections. Each entry
    /// is either the aggregated result or the failing slice and its error.
    pub fn trace_results(
        &self,
        w: f64,
        centers: &[f64],
    ) -> Result<Vec<Result<TraceResult, (usize, SolverError)>>, SweepError> {
        TraceLayout::single(w).validate()?;
        self.check_snapped(w)?;
        let slabs: Vec<Vec<(f64, f64)>> = self
            .cfg
            .slice_slabs(self.model.style.x3)
            .into_iter()
            .map(|(lo, hi)| self.model.slab_segments(lo, hi))
            .collect();

        // Plan: content keys for every (center, slice, segment) and its vacuum twin.
        type Keys = Vec<Vec<(RasterKey, RasterKey, f64)>>;
        let mut plan: Vec<Result<Keys, (usize, SolverError)>> = Vec::new();
        let mut pending: Vec<(RasterKey, DielectricRaster)> = Vec::new();
        {
            let memo = self.memo.lock().unwrap();
            let mut seen: std::collections::HashSet<RasterKey> = std::collections::HashSet::new();
            let mut queue = |r: DielectricRaster| {
                let key = raster_key(&r);
                if !memo.contains_key(&key) && seen.insert(key) {
                    pending.push((key, r));
                }
                key
            };
            for &center in centers {
                let mut keys = Vec::with_capacity(slabs.len());
                let mut failed = None;
                'slices: for (k, segs) in slabs.iter().enumerate() {
                    let mut slab = Vec::with_capacity(segs.len());
                    for &(x, len) in segs {
                        match self.trace_raster(w, center, x) {
                            Ok(r) => {
                                let vac = r.vacuum();
                                slab.push((queue(r), queue(vac), len));
                            }
                            Err(e) => {
                                failed = Some((k, e));
                                break 'slices;
                            }
                        }
                    }
                    keys.push(slab);
                }
                plan.push(match failed {
                    Some(f) => Err(f),
                    None => Ok(keys),
                });
            }
        }
        let fresh = self.solve_unique(pending);
        let memo = self.memo.lock().unwrap();
        let lookup = |key: &RasterKey| -> Result<f64, SolverError> {
            match memo.get(key) {
                Some(c) => Ok(*c),
                None => fresh[key].clone(),
            }
        };

        let mut out = Vec::with_capacity(centers.len());
        for (&center, keys) in centers.iter().zip(plan) {
            let keys = match keys {
                Ok(k) => k,
                Err(f) => {
                    out.push(Err(f));
                    continue;
                }
            };
            let mut slice_delays = Vec::with_capacity(keys.len());
            let mut slice_z0 = Vec::with_capacity(keys.len());
            let (mut z0_min, mut z0_max) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut failed = None;
            'slices: for (k, slab) in keys.iter().enumerate() {
                let (mut delay, mut z0, mut len) = (0.0, 0.0, 0.0);
                for (loaded, vacuum, l) in slab {
                    let p = lookup(loaded).and_then(|c| lookup(vacuum).and_then(|c0| effective_params(c, c0)));
                    match p {
                        Ok(p) => {
                            delay += l * p.delay;
                            z0 += l * p.z0;
                            len += l;
                            z0_min = z0_min.min(p.z0);
                            z0_max = z0_max.max(p.z0);
                        }
                        Err(e) => {
                            failed = Some((k, e));
                            break 'slices;
                        }
                    }
                }
                slice_delays.push(delay / len);
                slice_z0.push(z0 / len);
            }
            if let Some(f) = failed {
                out.push(Err(f));
                continue;
            }
            let n = slice_delays.len() as f64;
            out.push(Ok(TraceResult {
                center,
                delay: slice_delays.iter().sum::<f64>() / n,
                z0: slice_z0.iter().sum::<f64>() / n,
                z0_min,
                z0_max,
                slice_delays,
            }));
        }
        Ok(out)
    }

    /// Delay and impedance of a single trace centered at `center`.
    pub fn delay_at_offset(&self, w: f64, center: f64) -> Result<TraceResult, SweepError> {
        let mut r = self.trace_results(w, &[center])?;
        r.pop().unwrap().map_err(|(slice, source)| SweepError::Solver {
            center,
            slice,
            source,
            partial: PartialRows {
                header: SINGLE_CSV_HEADER,
                rows: Vec::new(),
            },
        })
    }

    pub fn run_single_sweep(&self, layout: &TraceLayout) -> Result<DelayProfile, SweepError> {
        if layout.kind != TraceKind::Single {
            return Err(SweepError::Config("single sweep needs a single-ended layout".into()));
        }
        layout.validate()?;
        let offsets = &self.cfg.offsets;
        let results = self.trace_results(layout.w, offsets)?;
        let mut rows = Vec::new();
        let mut profile = DelayProfile {
            style: self.model.style.name.clone(),
            w: layout.w,
            offsets: Vec::new(),
            delay: Vec::new(),
            z0: Vec::new(),
            z0_min: Vec::new(),
            z0_max: Vec::new(),
            period: self.model.style.y3,
        };
        for (&o, res) in offsets.iter().zip(results) {
            match res {
                Ok(t) => {
                    rows.push(vec![o, t.delay, t.z0]);
                    profile.offsets.push(o);
                    profile.delay.push(t.delay);
                    profile.z0.push(t.z0);
                    profile.z0_min.push(t.z0_min);
                    profile.z0_max.push(t.z0_max);
                }
                Err((slice, source)) => {
                    return Err(SweepError::Solver {
                        center: o,
                        slice,
                        source,
                        partial: PartialRows {
                            header: SINGLE_CSV_HEADER,
                            rows,
                        },
                    })
                }
            }
        }
        Ok(profile)
    }

    /// Each trace of the pair is solved in isolation; skew is the difference of
    /// the two single-trace delays.
    pub fn run_diff_sweep(&self, layout: &TraceLayout) -> Result<SkewProfile, SweepError> {
        if layout.kind != TraceKind::Differential {
            return Err(SweepError::Config("differential sweep needs a differential layout".into()));
        }
        layout.validate()?;
        let half = layout.half_pitch();
        let offsets = &self.cfg.offsets;
        let centers: Vec<f64> = offsets.iter().flat_map(|o| [o - half, o + half]).collect();
        let results = self.trace_results(layout.w, &centers)?;
        let mut profile = SkewProfile {
            style: self.model.style.name.clone(),
            w: layout.w,
            s: layout.s,
            offsets: Vec::new(),
            skew: Vec::new(),
            delay_left: Vec::new(),
            delay_right: Vec::new(),
            period: self.model.style.y3,
        };
        let mut rows = Vec::new();
        let mut it = results.into_iter();
        for &o in offsets {
            let left = it.next().unwrap();
            let right = it.next().unwrap();
            match (left, right) {
                (Ok(l), Ok(r)) => {
                    let skew = l.delay - r.delay;
                    rows.push(vec![o, skew, l.delay, r.delay]);
                    profile.offsets.push(o);
                    profile.skew.push(skew);
                    profile.delay_left.push(l.delay);
                    profile.delay_right.push(r.delay);
                }
                (Err((slice, source)), _) | (_, Err((slice, source))) => {
                    return Err(SweepError::Solver {
                        center: o,
                        slice,
                        source,
                        partial: PartialRows {
                            header: DIFF_CSV_HEADER,
                            rows,
                        },
                    })
                }
            }
        }
        Ok(profile)
    }

    /// Half the delay difference between the hill and valley trace positions.
    pub fn two_point_delta_t(&self, w: f64) -> Result<f64, SweepError> {
        let centers = [self.model.hill_offset(), self.model.valley_offset()];
        let r = self.trace_results(w, &centers)?;
        let mut d = Vec::new();
        for (c, res) in centers.iter().zip(r) {
            match res {
                Ok(t) => d.push(t.delay),
                Err((slice, source)) => {
                    return Err(SweepError::Solver {
                        center: *c,
                        slice,
                        source,
                        partial: PartialRows::default(),
                    })
                }
            }
        }
        Ok((d[0] - d[1]).abs() / 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{FabricStyle, Laminate};

    /// Coarse, narrow-box configuration that keeps unit tests quick.
    fn quick_cfg(offsets: Vec<f64>) -> SweepConfig {
        SweepConfig {
            offsets,
            n_slices: 4,
            grid: GridSpec {
                spacing: 0.25,
                lateral_periods: 1.0,
                top_factor: 6.0,
            },
            tol: 1e-8,
            max_iter: None,
            parallelism: Parallelism::Parallel,
        }
    }

    fn model(i: usize) -> LatticeModel {
        LatticeModel::new(FabricStyle::builtin()[i].clone(), Laminate::default()).unwrap()
    }

    #[test]
    fn offset_range_inclusive() {
        let o = offset_range(-12.0, 12.0, 1.0).unwrap();
        assert_eq!(o.len(), 25);
        assert_eq!((o[0], o[24]), (-12.0, 12.0));
        assert!(offset_range(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn homogenized_model_has_flat_delay() {
        let s = Sweeper::new(model(0).homogenized(), quick_cfg(vec![0.0, 3.0, 7.0])).unwrap();
        let p = s.run_single_sweep(&TraceLayout::single(4.0)).unwrap();
        let d0 = p.delay[0];
        for d in &p.delay {
            assert!((d - d0).abs() / d0 < 1e-3);
        }
        // One loaded and one vacuum raster cover every offset and slice.
        assert_eq!(s.solves(), 2);
    }

    #[test]
    fn single_point_profile() {
        let s = Sweeper::new(model(0), quick_cfg(vec![0.0])).unwrap();
        let p = s.run_single_sweep(&TraceLayout::single(4.0)).unwrap();
        assert_eq!(p.offsets, vec![0.0]);
        assert!(p.delay[0] > 0.0 && p.z0[0] > 0.0);
        assert!(p.z0_min[0] <= p.z0[0] && p.z0[0] <= p.z0_max[0]);
    }

    #[test]
    fn hill_is_slower_than_valley() {
        let m = model(0);
        let s = Sweeper::new(m.clone(), quick_cfg(vec![0.0])).unwrap();
        let hill = s.delay_at_offset(4.0, m.hill_offset()).unwrap().delay;
        let valley = s.delay_at_offset(4.0, m.valley_offset()).unwrap().delay;
        assert!(hill > valley, "{hill} <= {valley}");

        // All-glass and all-resin laminates bound both.
        let mut glass = m.clone();
        glass.laminate.eps_resin = glass.laminate.eps_glass;
        let resin = m.homogenized();
        let g = Sweeper::new(glass, quick_cfg(vec![0.0])).unwrap().delay_at_offset(4.0, 0.0).unwrap().delay;
        let r = Sweeper::new(resin, quick_cfg(vec![0.0])).unwrap().delay_at_offset(4.0, 0.0).unwrap().delay;
        assert!(r < valley && hill < g);
    }

    #[test]
    fn diff_sweep_is_composition_of_single_solves() {
        let m = model(1);
        let cfg = quick_cfg(vec![-2.0, 0.0, 2.0]);
        let s = Sweeper::new(m.clone(), cfg.clone()).unwrap();
        let p = s.run_diff_sweep(&TraceLayout::differential(4.0, 4.0)).unwrap();
        let fresh = Sweeper::new(m, cfg).unwrap();
        for (i, &o) in p.offsets.iter().enumerate() {
            let l = fresh.delay_at_offset(4.0, o - 4.0).unwrap().delay;
            let r = fresh.delay_at_offset(4.0, o + 4.0).unwrap().delay;
            assert_eq!(p.skew[i], l - r);
            assert_eq!(p.skew[i], p.delay_left[i] - p.delay_right[i]);
        }
        // Mirror symmetry about y = 0.
        assert!((p.skew[0] + p.skew[2]).abs() < 1e-6 * p.delay_left[0]);
        assert!(p.skew[1].abs() < 1e-6 * p.delay_left[1]);
    }

    #[test]
    fn rejects_wrong_layout_kind_and_unsnapped_width() {
        let s = Sweeper::new(model(0), quick_cfg(vec![0.0])).unwrap();
        assert!(matches!(
            s.run_single_sweep(&TraceLayout::differential(4.0, 4.0)),
            Err(SweepError::Config(_))
        ));
        assert!(matches!(
            s.run_single_sweep(&TraceLayout::single(4.1)),
            Err(SweepError::Config(_))
        ));
    }

    #[test]
    fn solver_failure_reports_partial_rows() {
        let mut cfg = quick_cfg(vec![0.0, 7.0]);
        cfg.max_iter = Some(1);
        cfg.tol = 1e-10;
        let s = Sweeper::new(model(0), cfg).unwrap();
        let err = s.run_single_sweep(&TraceLayout::single(4.0)).unwrap_err();
        match &err {
            SweepError::Solver { center, slice, partial, .. } => {
                assert_eq!(*center, 0.0);
                assert_eq!(*slice, 0);
                assert!(partial.rows.is_empty());
                assert!(partial.to_csv().starts_with(SINGLE_CSV_HEADER));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let p = DelayProfile {
            style: "x".into(),
            w: 4.0,
            offsets: vec![-1.0, 0.0],
            delay: vec![143.123456789, 144.5],
            z0: vec![50.0, 49.75],
            z0_min: vec![50.0, 49.75],
            z0_max: vec![50.0, 49.75],
            period: 14.0,
        };
        let csv = p.to_csv();
        assert!(csv.starts_with("offset_mil,delay_ps_per_in,z0_ohm\n"));
        let back = DelayProfile::from_csv(&csv, "x", 4.0, 14.0).unwrap();
        assert_eq!(back.offsets, p.offsets);
        for (a, b) in back.delay.iter().zip(&p.delay) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(parse_csv("a,b\n1,2\n", SINGLE_CSV_HEADER).is_err());
    }
}
