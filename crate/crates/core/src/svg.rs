//! Static SVG figures: offset profiles, densities, exceedance bars and raster
//! heatmaps. Output is plain text with fixed number formatting, so identical
//! inputs give identical files.

use std::fmt::Write;

use crate::fieldsolver::DielectricRaster;
use crate::report::{ComparisonTable, StatsReport};
use crate::stats::InterpolatedProfile;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(lo, hi): (f64, f64)| {
            if hi - lo > 1e-12 * hi.abs().max(1.0) {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Self { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        W / 2.0,
        escape(title),
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0,
        escape(xlabel),
        (TOP + H - BOTTOM) / 2.0,
        (TOP + H - BOTTOM) / 2.0,
        escape(ylabel),
    );
}

fn axes(out: &mut String, f: &Frame) {
    let _ = writeln!(
        out,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for k in 0..=4 {
        let fx = f.x.0 + (f.x.1 - f.x.0) * k as f64 / 4.0;
        let fy = f.y.0 + (f.y.1 - f.y.0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            f.px(fx),
            H - BOTTOM + 16.0,
            tick(fx)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            LEFT - 6.0,
            f.py(fy) + 4.0,
            tick(fy)
        );
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn polyline(out: &mut String, f: &Frame, pts: impl Iterator<Item = (f64, f64)>, color: &str) {
    let coords: Vec<String> = pts.map(|(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
    let _ = writeln!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
        coords.join(" ")
    );
}

fn star(out: &mut String, x: f64, y: f64, color: &str) {
    let r = 5.0;
    let pts: Vec<String> = (0..10)
        .map(|k| {
            let rad = if k % 2 == 0 { r } else { r * 0.45 };
            let a = std::f64::consts::PI * (k as f64 / 5.0 - 0.5);
            format!("{:.2},{:.2}", x + rad * a.cos(), y + rad * a.sin())
        })
        .collect();
    let _ = writeln!(out, "<polygon points=\"{}\" fill=\"{color}\"/>", pts.join(" "));
}

/// Sampled profile as stars with the spline drawn through them.
pub fn profile_plot(
    title: &str,
    ylabel: &str,
    offsets: &[f64],
    values: &[f64],
    spline: Option<&InterpolatedProfile>,
) -> String {
    let xlo = offsets.iter().copied().fold(f64::INFINITY, f64::min);
    let xhi = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let curve: Vec<(f64, f64)> = match spline {
        Some(s) => (0..=400)
            .map(|k| {
                let x = xlo + (xhi - xlo) * k as f64 / 400.0;
                (x, s.eval(x))
            })
            .collect(),
        None => offsets.iter().copied().zip(values.iter().copied()).collect(),
    };
    let all = values.iter().copied().chain(curve.iter().map(|p| p.1));
    let (ylo, yhi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let margin = 0.05 * (yhi - ylo);
    let f = Frame::new((xlo, xhi), (ylo - margin, yhi + margin));
    let mut out = String::new();
    header(&mut out, title, "offset, mil", ylabel);
    axes(&mut out, &f);
    polyline(&mut out, &f, curve.into_iter(), PALETTE[0]);
    for (&x, &y) in offsets.iter().zip(values) {
        star(&mut out, f.px(x), f.py(y), PALETTE[1]);
    }
    out.push_str("</svg>\n");
    out
}

fn bars(out: &mut String, f: &Frame, x0: f64, width: f64, h: f64, color: &str) {
    let (a, b) = (f.px(x0), f.px(x0 + width));
    let (top, base) = (f.py(h), f.py(f.y.0));
    let _ = writeln!(
        out,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\" stroke=\"white\" stroke-width=\"0.5\"/>",
        a,
        top,
        (b - a).max(0.0),
        (base - top).max(0.0)
    );
}

/// Density histogram of the sampled profile values in a report.
pub fn density_plot(report: &StatsReport) -> String {
    let h = &report.histogram;
    let lo = h.edges[0];
    let hi = h.edges[h.edges.len() - 1];
    let top = h.density.iter().copied().fold(0.0, f64::max) * 1.05;
    let f = Frame::new((lo, hi), (0.0, top));
    let mut out = String::new();
    let what = match report.kind {
        crate::stats::ExceedanceKind::Dde => "delay",
        crate::stats::ExceedanceKind::Dse => "skew",
    };
    header(
        &mut out,
        &format!("{} {what} density", report.style),
        &format!("{what}, ps/inch"),
        "probability density",
    );
    axes(&mut out, &f);
    for (k, &d) in h.density.iter().enumerate() {
        bars(&mut out, &f, h.edges[k], h.edges[k + 1] - h.edges[k], d, PALETTE[0]);
    }
    out.push_str("</svg>\n");
    out
}

/// Grouped bars: one group per threshold, one bar per style (empirical), with
/// the arcsine values marked by ticks.
pub fn exceedance_bars(table: &ComparisonTable) -> String {
    let n = table.thresholds.len().max(1) as f64;
    let f = Frame::new((0.0, n), (0.0, 100.0));
    let mut out = String::new();
    let label = table.kind.label();
    header(
        &mut out,
        &format!("{label} by style (bars: sampled, ticks: arcsine)"),
        "threshold, ps/inch",
        &format!("{label}, %"),
    );
    let _ = writeln!(
        out,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for k in 0..=4 {
        let v = 25.0 * k as f64;
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            LEFT - 6.0,
            f.py(v) + 4.0,
            tick(v)
        );
    }
    let m = table.rows.len().max(1) as f64;
    let bw = 0.8 / m;
    for (g, t) in table.thresholds.iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            f.px(g as f64 + 0.5),
            H - BOTTOM + 16.0,
            tick(*t)
        );
        for (r, row) in table.rows.iter().enumerate() {
            let x0 = g as f64 + 0.1 + r as f64 * bw;
            let color = PALETTE[r % PALETTE.len()];
            bars(&mut out, &f, x0, bw, 100.0 * row.empirical[g], color);
            let y = f.py(100.0 * row.arcsine[g]);
            let _ = writeln!(
                out,
                "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"black\" stroke-width=\"2\"/>",
                f.px(x0),
                f.px(x0 + bw)
            );
        }
    }
    for (r, row) in table.rows.iter().enumerate() {
        let y = TOP + 14.0 + 16.0 * r as f64;
        let x = W - RIGHT - 90.0;
        let _ = writeln!(
            out,
            "<rect x=\"{x}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{}\" y=\"{y}\">{}</text>",
            y - 9.0,
            PALETTE[r % PALETTE.len()],
            x + 14.0,
            escape(&row.style)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn heat(t: f64) -> String {
    // White through yellow to dark red.
    let t = t.clamp(0.0, 1.0);
    let r = 255.0 - 115.0 * (t - 0.5).max(0.0) * 2.0;
    let g = 255.0 * (1.0 - t);
    let b = 255.0 * (1.0 - 2.0 * t).max(0.0);
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Permittivity map of a cross-section; conductor cells are drawn black.
pub fn raster_heatmap(title: &str, r: &DielectricRaster) -> String {
    let g = r.grid();
    let f = Frame::new((g.y0, g.y0 + g.ny as f64 * g.dy), (g.z0, g.z0 + g.nz as f64 * g.dz));
    let eps = r.eps();
    let lo = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut metal = vec![false; g.len()];
    for c in r.conductors() {
        for &i in &c.cells {
            metal[i] = true;
        }
    }
    let mut out = String::new();
    header(&mut out, title, "y, mil", "z, mil");
    let (cw, ch) = (f.px(g.dy) - f.px(0.0), f.py(0.0) - f.py(g.dz));
    for iz in 0..g.nz {
        // Merge runs of equal cells into one rectangle per row.
        let mut iy = 0;
        while iy < g.ny {
            let i = iz * g.ny + iy;
            let mut j = iy + 1;
            while j < g.ny && eps[iz * g.ny + j] == eps[i] && metal[iz * g.ny + j] == metal[i] {
                j += 1;
            }
            let color = if metal[i] {
                "#000000".to_string()
            } else if hi > lo {
                heat((eps[i] - lo) / (hi - lo))
            } else {
                heat(0.5)
            };
            let y = g.y0 + iy as f64 * g.dy;
            let z = g.z0 + (iz + 1) as f64 * g.dz;
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\"/>",
                f.px(y),
                f.py(z),
                cw * (j - iy) as f64,
                ch
            );
            iy = j;
        }
    }
    axes(&mut out, &f);
    out.push_str("</svg>\n");
    out
}
