//! Rectangularized woven-glass laminate model.
//!
//! Axis convention: propagation along X, trace offset along Y, height along Z.
//! All lengths are in mils. The laminate occupies `0 <= z <= h`, with the ground
//! plane at `z = 0` and air above `z = h`.
//!
//! Two abutting bundle layers of thickness `x1` are centered at `z = h/2`. One
//! holds the Y-running (fill) bundles, glass where `x mod x3` falls inside a
//! centered interval of width `x2`; the other holds the X-running (warp) bundles,
//! glass where `y mod y3` falls inside a centered interval of width `y2`.
//! [`LayerOrder`] picks which one sits nearer the trace; the default puts the
//! warp layer on top, with the fill layer below it. Both bundle families are centered on the origin, so offset
//! 0 puts a trace directly over an X-running bundle centerline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fieldsolver::{DielectricRaster, Grid2D, SolverError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("style {style}: dimension {field} must be positive and finite, got {value}")]
    NonPositive {
        style: String,
        field: &'static str,
        value: f64,
    },
    #[error("style {style}: bundle exceeds pitch ({width} > {pitch})")]
    BundleExceedsPitch {
        style: String,
        width: f64,
        pitch: f64,
    },
    #[error("style {style}: unequal bundle thickness x1 = {x1}, y1 = {y1} is not supported")]
    UnequalThickness { style: String, x1: f64, y1: f64 },
    #[error("layers exceed laminate height (2 * {x1} > {h})")]
    LayersExceedHeight { x1: f64, h: f64 },
    #[error("invalid laminate: {0}")]
    Laminate(String),
    #[error("invalid trace layout: {0}")]
    Layout(String),
}

/// Bundle dimensions of one glass fabric style, in mils.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FabricStyle {
    pub name: String,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
}

impl FabricStyle {
    pub fn new(name: impl Into<String>, x: [f64; 3], y: [f64; 3]) -> Self {
        Self {
            name: name.into(),
            x1: x[0],
            x2: x[1],
            x3: x[2],
            y1: y[0],
            y2: y[1],
            y3: y[2],
        }
    }

    /// The four reference styles: 1035, 1080, 1078 and 3313.
    pub fn builtin() -> Vec<FabricStyle> {
        vec![
            FabricStyle::new("1035", [0.8, 9.0, 14.0], [0.8, 12.0, 14.0]),
            FabricStyle::new("1080", [1.35, 8.0, 17.0], [1.35, 12.0, 22.0]),
            FabricStyle::new("1078", [1.2, 14.0, 16.0], [1.2, 17.0, 18.0]),
            FabricStyle::new("3313", [1.7, 13.0, 16.0], [1.7, 11.0, 16.0]),
        ]
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        let dims = [
            ("x1", self.x1),
            ("x2", self.x2),
            ("x3", self.x3),
            ("y1", self.y1),
            ("y2", self.y2),
            ("y3", self.y3),
        ];
        for (field, value) in dims {
            if !(value.is_finite() && value > 0.0) {
                return Err(LatticeError::NonPositive {
                    style: self.name.clone(),
                    field,
                    value,
                });
            }
        }
        for (width, pitch) in [(self.x2, self.x3), (self.y2, self.y3)] {
            if width > pitch {
                return Err(LatticeError::BundleExceedsPitch {
                    style: self.name.clone(),
                    width,
                    pitch,
                });
            }
        }
        if self.x1 != self.y1 {
            return Err(LatticeError::UnequalThickness {
                style: self.name.clone(),
                x1: self.x1,
                y1: self.y1,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Laminate {
    /// Dielectric thickness, mil.
    pub h: f64,
    /// Trace metal thickness, mil.
    pub t: f64,
    pub eps_glass: f64,
    pub eps_resin: f64,
}

impl Default for Laminate {
    fn default() -> Self {
        Self {
            h: 4.0,
            t: 0.75,
            eps_glass: 6.0,
            eps_resin: 3.5,
        }
    }
}

impl Laminate {
    pub fn validate(&self) -> Result<(), LatticeError> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(LatticeError::Laminate(format!("h must be > 0, got {}", self.h)));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(LatticeError::Laminate(format!("t must be > 0, got {}", self.t)));
        }
        if !(self.eps_resin >= 1.0 && self.eps_glass >= self.eps_resin && self.eps_glass.is_finite())
        {
            return Err(LatticeError::Laminate(format!(
                "need eps_glass >= eps_resin >= 1, got {} / {}",
                self.eps_glass, self.eps_resin
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Single,
    Differential,
}

/// Trace geometry. For a differential pair `offset` is the midpoint between the
/// two traces and `s` is the edge-to-edge separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceLayout {
    pub kind: TraceKind,
    pub w: f64,
    pub s: f64,
    pub offset: f64,
}

impl TraceLayout {
    pub fn single(w: f64) -> Self {
        Self {
            kind: TraceKind::Single,
            w,
            s: 0.0,
            offset: 0.0,
        }
    }

    pub fn differential(w: f64, s: f64) -> Self {
        Self {
            kind: TraceKind::Differential,
            w,
            s,
            offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        if !(self.w.is_finite() && self.w > 0.0) {
            return Err(LatticeError::Layout(format!("w must be > 0, got {}", self.w)));
        }
        if self.kind == TraceKind::Differential && !(self.s.is_finite() && self.s > 0.0) {
            return Err(LatticeError::Layout(format!(
                "s must be > 0 for a differential pair, got {}",
                self.s
            )));
        }
        Ok(())
    }

    /// Distance from the pair midpoint to each trace centerline.
    pub fn half_pitch(&self) -> f64 {
        (self.w + self.s) / 2.0
    }
}

/// Which bundle family forms the layer nearer the trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerOrder {
    /// X-running (warp) bundles on top, Y-running (fill) bundles below.
    #[default]
    WarpOnTop,
    /// Y-running (fill) bundles on top, X-running (warp) bundles below.
    FillOnTop,
}

/// Immutable periodic permittivity field of one laminate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeModel {
    pub style: FabricStyle,
    pub laminate: Laminate,
    #[serde(default)]
    pub layer_order: LayerOrder,
}

/// Wraps `v` into `[-p/2, p/2)`.
fn centered_mod(v: f64, p: f64) -> f64 {
    (v + p / 2.0).rem_euclid(p) - p / 2.0
}

impl LatticeModel {
    pub fn new(style: FabricStyle, laminate: Laminate) -> Result<Self, LatticeError> {
        style.validate()?;
        laminate.validate()?;
        if 2.0 * style.x1 > laminate.h {
            return Err(LatticeError::LayersExceedHeight {
                x1: style.x1,
                h: laminate.h,
            });
        }
        Ok(Self {
            style,
            laminate,
            layer_order: LayerOrder::default(),
        })
    }

    pub fn with_layer_order(mut self, order: LayerOrder) -> Self {
        self.layer_order = order;
        self
    }

    /// Same geometry with the glass replaced by resin.
    pub fn homogenized(&self) -> Self {
        let mut m = self.clone();
        m.laminate.eps_glass = m.laminate.eps_resin;
        m
    }

    /// Bottom of the lower layer, boundary between layers, top of the upper layer.
    pub fn layer_bounds(&self) -> (f64, f64, f64) {
        let mid = self.laminate.h / 2.0;
        (mid - self.style.x1, mid, mid + self.style.x1)
    }

    /// True when `x` lies over a Y-running (fill) bundle.
    pub fn in_fill_bundle(&self, x: f64) -> bool {
        centered_mod(x, self.style.x3).abs() <= self.style.x2 / 2.0
    }

    /// True when `y` lies under an X-running (warp) bundle.
    pub fn in_warp_bundle(&self, y: f64) -> bool {
        centered_mod(y, self.style.y3).abs() <= self.style.y2 / 2.0
    }

    /// Splits `[x_lo, x_hi)` at fill-bundle edges. Returns `(midpoint, length)` of
    /// each piece; the cross-section is constant along every piece.
    pub fn slab_segments(&self, x_lo: f64, x_hi: f64) -> Vec<(f64, f64)> {
        let (half, p) = (self.style.x2 / 2.0, self.style.x3);
        let k0 = ((x_lo - half) / p).floor() as i64 - 1;
        let k1 = ((x_hi + half) / p).ceil() as i64 + 1;
        let mut cuts = vec![x_lo, x_hi];
        for k in k0..=k1 {
            for e in [k as f64 * p - half, k as f64 * p + half] {
                if e > x_lo && e < x_hi {
                    cuts.push(e);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2)
            .filter(|c| c[1] - c[0] > 1e-12 * p)
            .map(|c| ((c[0] + c[1]) / 2.0, c[1] - c[0]))
            .collect()
    }

    pub fn eps_at(&self, x: f64, y: f64, z: f64) -> f64 {
        let lam = &self.laminate;
        if !(0.0..=lam.h).contains(&z) {
            return 1.0;
        }
        let (lo, mid, hi) = self.layer_bounds();
        let (lower, upper) = (self.in_fill_bundle(x), self.in_warp_bundle(y));
        let (lower, upper) = match self.layer_order {
            LayerOrder::WarpOnTop => (lower, upper),
            LayerOrder::FillOnTop => (upper, lower),
        };
        let glass = if (lo..mid).contains(&z) {
            lower
        } else if (mid..=hi).contains(&z) {
            upper
        } else {
            false
        };
        if glass {
            lam.eps_glass
        } else {
            lam.eps_resin
        }
    }

    /// Glass volume fraction of one `x3 * y3 * h` unit cell.
    pub fn glass_fraction(&self) -> f64 {
        let s = &self.style;
        s.x1 * (s.x2 / s.x3 + s.y2 / s.y3) / self.laminate.h
    }

    /// Offset where the trace sits over the warp bundle centerline (glass hill).
    pub fn hill_offset(&self) -> f64 {
        0.0
    }

    /// Offset midway between two warp bundles (resin valley).
    pub fn valley_offset(&self) -> f64 {
        self.style.y3 / 2.0
    }

    /// Samples the permittivity at cell centers of `grid` for the cross-section at `x`.
    pub fn raster_slice(&self, x: f64, grid: Grid2D) -> Result<DielectricRaster, SolverError> {
        grid.validate()?;
        if !x.is_finite() {
            return Err(SolverError::InvalidInput(format!("slice position {x} is not finite")));
        }
        let mut eps = Vec::with_capacity(grid.len());
        for iz in 0..grid.nz {
            let z = grid.z_center(iz);
            for iy in 0..grid.ny {
                eps.push(self.eps_at(x, grid.y_center(iy), z));
            }
        }
        DielectricRaster::new(grid, eps)
    }
}
