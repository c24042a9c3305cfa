use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fiberweave::cache::Cache;
use fiberweave::catalog::Catalog;
use fiberweave::lattice::{LatticeModel, LayerOrder, TraceKind, TraceLayout};
use fiberweave::numfmt::sig;
use fiberweave::par::Parallelism;
use fiberweave::report::{analyze, ComparisonTable, StatsConfig, StatsReport, TraceSpec};
use fiberweave::stats::{InterpolatedProfile, ProfileKind};
use fiberweave::svg;
use fiberweave::sweep::{
    offset_range, DelayProfile, GridSpec, SkewProfile, SweepConfig, SweepError, Sweeper, DIFF_CSV_HEADER,
    SINGLE_CSV_HEADER,
};
use fiberweave::validation;

use crate::args::{
    CatalogArgs, Cli, Command, Common, CompareArgs, LayerOrderArg, LayoutArgs, RasterArgs, StatsArgs, SweepArgs,
    SweepOpts, ValidateArgs,
};
use crate::CliError;

type Out<'a> = &'a mut dyn Write;

pub fn run(cli: Cli, out: Out) -> Result<(), CliError> {
    match cli.command {
        Command::Catalog(a) => cmd_catalog(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Stats(a) => cmd_stats(&a, out),
        Command::Compare(a) => cmd_compare(&a, out),
        Command::Validate(a) => cmd_validate(&a, out),
        Command::Raster(a) => cmd_raster(&a, out),
    }
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|e| CliError::Config(format!("cannot write output: {e}")))?
    };
}

fn num(v: f64) -> String {
    let s = format!("{v}");
    if s == "-0" { "0".into() } else { s }
}

fn load_catalog(c: &Common) -> Result<Catalog, CliError> {
    match &c.catalog {
        Some(p) => Ok(Catalog::load(p)?),
        None => Ok(Catalog::builtin()),
    }
}

fn layer_order(c: &Common) -> LayerOrder {
    match c.layer_order {
        LayerOrderArg::WarpOnTop => LayerOrder::WarpOnTop,
        LayerOrderArg::FillOnTop => LayerOrder::FillOnTop,
    }
}

fn models(c: &Common) -> Result<Vec<LatticeModel>, CliError> {
    let cat = load_catalog(c)?;
    let order = layer_order(c);
    Ok(cat
        .select(&c.styles)?
        .into_iter()
        .map(|e| e.model().with_layer_order(order))
        .collect())
}

fn parallelism(c: &Common) -> Parallelism {
    if c.sequential {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    }
}

fn out_dir(c: &Common) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&c.out)
        .map_err(|e| CliError::Config(format!("output directory {} is not writable: {e}", c.out.display())))?;
    Ok(c.out.clone())
}

fn cache(c: &Common) -> Cache {
    match &c.cache {
        Some(d) => Cache::new(d),
        None => Cache::from_env_or(c.out.join(".cache")),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn layout(l: &LayoutArgs) -> Result<TraceLayout, CliError> {
    let layout = if l.diff {
        TraceLayout::differential(l.w, l.s)
    } else {
        TraceLayout::single(l.w)
    };
    layout.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(layout)
}

fn parse_range(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Config(format!("{what} must be min:max:step, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    offset_range(v[0], v[1], v[2]).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

fn sweep_config(o: &SweepOpts, c: &Common) -> Result<SweepConfig, CliError> {
    let mut cfg = SweepConfig {
        offsets: parse_range(&o.offsets, "--offsets")?,
        n_slices: o.slices,
        grid: GridSpec {
            spacing: o.grid,
            ..GridSpec::default()
        },
        max_iter: o.max_iter,
        parallelism: parallelism(c),
        ..SweepConfig::default()
    };
    if let Some(t) = o.tol {
        cfg.tol = t;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

/// File stem shared by the sweep, stats and compare outputs of one style.
fn stem(model: &LatticeModel, layout: &TraceLayout) -> String {
    let mut s = match layout.kind {
        TraceKind::Single => format!("{}-single-w{}", model.style.name, num(layout.w)),
        TraceKind::Differential => format!("{}-diff-w{}-s{}", model.style.name, num(layout.w), num(layout.s)),
    };
    if model.layer_order == LayerOrder::FillOnTop {
        s.push_str("-fill-on-top");
    }
    s
}

fn sweep_error(e: SweepError, partial_path: &Path) -> CliError {
    match e {
        SweepError::Config(_) | SweepError::Lattice(_) => CliError::Config(e.to_string()),
        SweepError::Solver { ref partial, .. } => {
            let written = fs::write(partial_path, partial.to_csv()).is_ok();
            CliError::Solver {
                message: e.to_string(),
                partial: written.then(|| partial_path.to_path_buf()),
            }
        }
    }
}

fn cmd_catalog(a: &CatalogArgs, out: Out) -> Result<(), CliError> {
    let cat = if a.builtin { Catalog::builtin() } else { load_catalog(&a.common)? };
    if a.common.json {
        let rows: Vec<_> = cat
            .entries
            .iter()
            .map(|e| serde_json::json!({ "style": e.style, "laminate": e.laminate }))
            .collect();
        say!(out, "{}", serde_json::to_string_pretty(&rows).expect("catalog serializes"));
        return Ok(());
    }
    say!(out, "{:<10} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}", "style", "x1", "x2", "x3", "y1", "y2", "y3");
    for e in &cat.entries {
        let s = &e.style;
        say!(
            out,
            "{:<10} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}",
            s.name,
            num(s.x1),
            num(s.x2),
            num(s.x3),
            num(s.y1),
            num(s.y2),
            num(s.y3)
        );
    }
    say!(out, "{} styles", cat.entries.len());
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, out: Out) -> Result<(), CliError> {
    let layout = layout(&a.layout)?;
    let cfg = sweep_config(&a.sweep, &a.common)?;
    let models = models(&a.common)?;
    let dir = out_dir(&a.common)?;
    let cache = cache(&a.common);
    for model in models {
        let name = model.style.name.clone();
        let stem = stem(&model, &layout);
        let csv_path = dir.join(format!("{stem}.csv"));
        let partial_path = dir.join(format!("{stem}.csv.partial"));
        let t0 = Instant::now();
        let mut status = String::from("cache hit");
        let (csv, json, plot) = match layout.kind {
            TraceKind::Single => {
                let p = match cache.load_single(&model, &layout, &cfg) {
                    Some(p) => p,
                    None => {
                        let sw = Sweeper::new(model.clone(), cfg.clone()).map_err(|e| sweep_error(e, &partial_path))?;
                        let p = sw.run_single_sweep(&layout).map_err(|e| sweep_error(e, &partial_path))?;
                        status = format!("{} solves", sw.solves());
                        if let Err(e) = cache.store_single(&model, &layout, &cfg, &p) {
                            eprintln!("warning: cache write failed: {e}");
                        }
                        p
                    }
                };
                let spline = InterpolatedProfile::from_delay(&p).ok();
                let plot = svg::profile_plot(
                    &format!("{name} delay, w = {} mil", num(layout.w)),
                    "delay, ps/inch",
                    &p.offsets,
                    &p.delay,
                    spline.as_ref(),
                );
                (p.to_csv(), serde_json::to_string_pretty(&p), plot)
            }
            TraceKind::Differential => {
                let p = match cache.load_diff(&model, &layout, &cfg) {
                    Some(p) => p,
                    None => {
                        let sw = Sweeper::new(model.clone(), cfg.clone()).map_err(|e| sweep_error(e, &partial_path))?;
                        let p = sw.run_diff_sweep(&layout).map_err(|e| sweep_error(e, &partial_path))?;
                        status = format!("{} solves", sw.solves());
                        if let Err(e) = cache.store_diff(&model, &layout, &cfg, &p) {
                            eprintln!("warning: cache write failed: {e}");
                        }
                        p
                    }
                };
                let spline = InterpolatedProfile::from_skew(&p).ok();
                let plot = svg::profile_plot(
                    &format!("{name} skew, w = {} mil, s = {} mil", num(layout.w), num(layout.s)),
                    "skew, ps/inch",
                    &p.offsets,
                    &p.skew,
                    spline.as_ref(),
                );
                (p.to_csv(), serde_json::to_string_pretty(&p), plot)
            }
        };
        write_file(&csv_path, &csv)?;
        let _ = fs::remove_file(&partial_path);
        if a.common.json {
            write_file(&dir.join(format!("{stem}.json")), &(json.expect("profile serializes") + "\n"))?;
        }
        if a.common.svg {
            write_file(&dir.join(format!("{stem}.svg")), &plot)?;
        }
        say!(
            out,
            "{name}: {} offsets, {status}, {:.2} s -> {}",
            cfg.offsets.len(),
            t0.elapsed().as_secs_f64(),
            csv_path.display()
        );
    }
    Ok(())
}

enum Loaded {
    Delay(DelayProfile),
    Skew(SkewProfile),
}

fn load_profile(
    model: &LatticeModel,
    layout: &TraceLayout,
    cfg: &SweepConfig,
    dir: &Path,
    cache: &Cache,
) -> Result<Loaded, CliError> {
    let stem = stem(model, layout);
    let path = dir.join(format!("{stem}.csv"));
    let (name, period) = (&model.style.name, model.style.y3);
    if let Ok(text) = fs::read_to_string(&path) {
        let bad = |e: String| CliError::Config(format!("{}: {e}", path.display()));
        return match layout.kind {
            TraceKind::Single => DelayProfile::from_csv(&text, name, layout.w, period).map(Loaded::Delay).map_err(bad),
            TraceKind::Differential => SkewProfile::from_csv(&text, name, layout.w, layout.s, period)
                .map(Loaded::Skew)
                .map_err(bad),
        };
    }
    let cached = match layout.kind {
        TraceKind::Single => cache.load_single(model, layout, cfg).map(Loaded::Delay),
        TraceKind::Differential => cache.load_diff(model, layout, cfg).map(Loaded::Skew),
    };
    cached.ok_or_else(|| {
        let mode = match layout.kind {
            TraceKind::Single => format!("--single -w {}", num(layout.w)),
            TraceKind::Differential => format!("--diff -w {} -s {}", num(layout.w), num(layout.s)),
        };
        CliError::Missing(format!(
            "no sweep data for {name} ({} not found); run `fwe sweep --styles {name} {mode}` first",
            path.display()
        ))
    })
}

fn stats_config(a: &StatsArgs) -> Result<StatsConfig, CliError> {
    let thresholds = match &a.stats.thresholds {
        Some(s) => {
            let t = parse_range(s, "--thresholds")?;
            if t.iter().any(|x| *x < 0.0) {
                return Err(CliError::Config("--thresholds must be non-negative".into()));
            }
            Some(t)
        }
        None => None,
    };
    Ok(StatsConfig {
        n: a.stats.samples,
        bins: a.stats.bins,
        seed: a.common.seed,
        thresholds,
        kumaraswamy: a.stats.kumaraswamy,
        parallelism: parallelism(&a.common),
    })
}

fn emit_report(
    report: &StatsReport,
    stem: &str,
    dir: &Path,
    common: &Common,
    out: Out,
) -> Result<(), CliError> {
    let json = report.to_json().map_err(|e| CliError::Config(e.to_string()))?;
    let path = dir.join(format!("{stem}-stats.json"));
    write_file(&path, &json)?;
    if common.csv {
        write_file(&dir.join(format!("{stem}-exceedance.csv")), &report.exceedance_csv())?;
    }
    if common.svg {
        write_file(&dir.join(format!("{stem}-density.svg")), &svg::density_plot(report))?;
    }
    let ints = &report.integer_thresholds;
    let at = |t: f64| ints.thresholds.iter().position(|&x| x == t).map(|i| (ints.empirical[i], ints.arcsine[i]));
    let (e3, a3) = at(3.0).unwrap_or((0.0, 0.0));
    say!(
        out,
        "{} {}: dt = {} ps/inch, P(T >= 3) = {:.1}% (arcsine {:.1}%){} -> {}",
        report.style,
        report.kind.label(),
        sig(report.delta_t_ps_per_in),
        100.0 * e3,
        100.0 * a3,
        report
            .kumaraswamy
            .map(|k| format!(", kumaraswamy a = {:.4} b = {:.4} ks = {:.4}", k.a, k.b, k.ks))
            .unwrap_or_default(),
        path.display()
    );
    Ok(())
}

fn stats_error(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn cmd_stats(a: &StatsArgs, out: Out) -> Result<(), CliError> {
    let layout = layout(&a.layout)?;
    let scfg = stats_config(a)?;
    let dir = out_dir(&a.common)?;
    let trace = TraceSpec {
        w: layout.w,
        s: (layout.kind == TraceKind::Differential).then_some(layout.s),
    };

    if let Some(input) = &a.input {
        let period = a.period.expect("clap enforces --period with --input");
        let text = fs::read_to_string(input)
            .map_err(|e| CliError::Missing(format!("cannot read {}: {e}", input.display())))?;
        let name = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "input".into());
        let header = text.lines().find(|l| !l.starts_with('#') && !l.trim().is_empty()).unwrap_or("").trim();
        let bad = |e: String| CliError::Config(format!("{}: {e}", input.display()));
        let (spline, kind) = if header == DIFF_CSV_HEADER {
            let p = SkewProfile::from_csv(&text, &name, layout.w, layout.s, period).map_err(bad)?;
            (InterpolatedProfile::from_skew(&p).map_err(stats_error)?, ProfileKind::Skew)
        } else if header == SINGLE_CSV_HEADER {
            let p = DelayProfile::from_csv(&text, &name, layout.w, period).map_err(bad)?;
            (InterpolatedProfile::from_delay(&p).map_err(stats_error)?, ProfileKind::Delay)
        } else {
            return Err(bad(format!(
                "unrecognized header {header:?}; expected {SINGLE_CSV_HEADER:?} or {DIFF_CSV_HEADER:?}"
            )));
        };
        let trace = TraceSpec {
            s: (kind == ProfileKind::Skew).then_some(layout.s),
            ..trace
        };
        let report = analyze(&spline, kind, trace, &scfg).map_err(stats_error)?;
        return emit_report(&report, &name, &dir, &a.common, out);
    }

    let cfg = sweep_config(&a.sweep, &a.common)?;
    let cache = cache(&a.common);
    for model in models(&a.common)? {
        let (spline, kind) = match load_profile(&model, &layout, &cfg, &dir, &cache)? {
            Loaded::Delay(p) => (InterpolatedProfile::from_delay(&p).map_err(stats_error)?, ProfileKind::Delay),
            Loaded::Skew(p) => (InterpolatedProfile::from_skew(&p).map_err(stats_error)?, ProfileKind::Skew),
        };
        let report = analyze(&spline, kind, trace, &scfg).map_err(stats_error)?;
        emit_report(&report, &stem(&model, &layout), &dir, &a.common, out)?;
    }
    Ok(())
}

fn cmd_compare(a: &CompareArgs, out: Out) -> Result<(), CliError> {
    let layout = layout(&a.layout)?;
    let thresholds = parse_range(&a.thresholds, "--thresholds")?;
    let models = models(&a.common)?;
    if models.len() < 2 {
        return Err(CliError::Config(format!("need ≥ 2 styles to compare, got {}", models.len())));
    }
    let dir = out_dir(&a.common)?;
    let mut reports = Vec::new();
    for m in &models {
        let path = dir.join(format!("{}-stats.json", stem(m, &layout)));
        let text = fs::read_to_string(&path).map_err(|_| {
            CliError::Missing(format!(
                "no stats report for {} ({} not found); run `fwe stats` first",
                m.style.name,
                path.display()
            ))
        })?;
        reports.push(StatsReport::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?);
    }
    let table = ComparisonTable::build(&reports, &thresholds).map_err(|e| CliError::Config(e.to_string()))?;
    write!(out, "{}", table.to_text()).map_err(|e| CliError::Config(e.to_string()))?;
    say!(
        out,
        "smallest dt: {} ({} ps/inch)",
        table.rows[table.smallest()].style,
        sig(table.rows[table.smallest()].delta_t)
    );
    let tag = match layout.kind {
        TraceKind::Single => format!("compare-dde-w{}", num(layout.w)),
        TraceKind::Differential => format!("compare-dse-w{}-s{}", num(layout.w), num(layout.s)),
    };
    if a.common.csv {
        write_file(&dir.join(format!("{tag}.csv")), &table.to_csv())?;
    }
    if a.common.json {
        write_file(
            &dir.join(format!("{tag}.json")),
            &(serde_json::to_string_pretty(&table).expect("table serializes") + "\n"),
        )?;
    }
    if a.common.svg {
        write_file(&dir.join(format!("{tag}.svg")), &svg::exceedance_bars(&table))?;
    }
    Ok(())
}

fn cmd_validate(a: &ValidateArgs, out: Out) -> Result<(), CliError> {
    let cases = validation::run_suite().map_err(|e| CliError::Solver {
        message: e.to_string(),
        partial: None,
    })?;
    for c in &cases {
        say!(
            out,
            "{} {}: {} vs {} (error {:.3}%, tolerance {:.1}%)",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            sig(c.value),
            sig(c.reference),
            100.0 * c.rel_error,
            100.0 * c.tolerance
        );
    }
    if a.common.json {
        let dir = out_dir(&a.common)?;
        write_file(
            &dir.join("validation.json"),
            &(serde_json::to_string_pretty(&cases).expect("cases serialize") + "\n"),
        )?;
    }
    let failed = cases.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Validation(format!("{failed} of {} validation cases failed", cases.len())));
    }
    say!(out, "all {} cases passed", cases.len());
    Ok(())
}

fn cmd_raster(a: &RasterArgs, out: Out) -> Result<(), CliError> {
    if !a.x.is_finite() || !a.offset.is_finite() {
        return Err(CliError::Config(format!("invalid slice position x = {}, offset = {}", a.x, a.offset)));
    }
    let dir = out_dir(&a.common)?;
    for model in models(&a.common)? {
        let model = if a.homogenized { model.homogenized() } else { model };
        let cfg = SweepConfig {
            grid: GridSpec {
                spacing: a.grid,
                ..GridSpec::default()
            },
            ..SweepConfig::default()
        };
        let sw = Sweeper::new(model.clone(), cfg).map_err(|e| CliError::Config(e.to_string()))?;
        let raster = if a.no_trace {
            let grid = sw.trace_grid(a.w, a.offset).map_err(|e| CliError::Config(e.to_string()))?;
            model.raster_slice(a.x, grid)
        } else {
            sw.trace_raster(a.w, a.offset, a.x)
        }
        .map_err(|e| CliError::Config(e.to_string()))?;
        let g = raster.grid();
        let mut text = String::with_capacity(g.len() * 4);
        for iz in 0..g.nz {
            let row: Vec<String> = (0..g.ny).map(|iy| num(raster.eps_cell(iy, iz))).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        let mut tag = format!("{}-raster-x{}-o{}", model.style.name, num(a.x), num(a.offset));
        if a.homogenized {
            tag.push_str("-homogenized");
        }
        let path = dir.join(format!("{tag}.csv"));
        write_file(&path, &text)?;
        if a.common.svg {
            let title = format!("{} cross-section at x = {} mil", model.style.name, num(a.x));
            write_file(&dir.join(format!("{tag}.svg")), &svg::raster_heatmap(&title, &raster))?;
        }
        say!(
            out,
            "{}: {} x {} cells, y from {} mil, rows bottom to top -> {}",
            model.style.name,
            g.ny,
            g.nz,
            sig(g.y0),
            path.display()
        );
    }
    Ok(())
}
