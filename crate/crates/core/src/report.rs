//! Statistics reports and multi-style comparison tables.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::numfmt::sig;
use crate::par::Parallelism;
use crate::stats::{
    deviation_series, exceedance, fit_arcsine, fit_kumaraswamy, ks_statistic, threshold_grid, value_series,
    ExceedanceKind, Histogram, InterpolatedProfile, ProfileKind, StatsError, DEFAULT_BINS, DEFAULT_SAMPLES,
};

/// Default spacing of the report threshold grid, ps/inch.
pub const THRESHOLD_STEP: f64 = 0.25;
/// Default integer thresholds of comparison tables, ps/inch.
pub const COMPARISON_THRESHOLDS: [f64; 8] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("report fails schema check: {0}")]
    Schema(String),
    #[error("need >= 2 reports to compare, got {0}")]
    TooFewReports(usize),
    #[error("cannot compare {0} with {1} reports")]
    MixedKinds(&'static str, &'static str),
    #[error("invalid report JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsConfig {
    pub n: usize,
    pub bins: usize,
    pub seed: u64,
    /// Explicit thresholds; `None` selects `0..=ceil(dt)` in steps of [`THRESHOLD_STEP`].
    pub thresholds: Option<Vec<f64>>,
    pub kumaraswamy: bool,
    pub parallelism: Parallelism,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            n: DEFAULT_SAMPLES,
            bins: DEFAULT_BINS,
            seed: 1,
            thresholds: None,
            kumaraswamy: false,
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSpec {
    pub w: f64,
    /// Edge-to-edge separation of a pair; `None` for a single trace.
    pub s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KumaraswamySummary {
    pub a: f64,
    pub b: f64,
    pub ks: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub n: usize,
    pub bins: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    /// Bin edges over the sampled profile values (delay or skew), ps/inch.
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub u_shaped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegerSubset {
    pub thresholds: Vec<f64>,
    pub empirical: Vec<f64>,
    pub arcsine: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub style: String,
    pub kind: ExceedanceKind,
    pub trace: TraceSpec,
    pub period_mil: f64,
    pub delta_t_ps_per_in: f64,
    /// Phase of the fitted `|dt sin(2 pi x / L + alpha)|`; informational only.
    pub alpha: f64,
    /// Period mean of the profile, ps/inch.
    pub mean_ps_per_in: f64,
    pub thresholds: Vec<f64>,
    pub empirical_exceedance: Vec<f64>,
    pub arcsine_exceedance: Vec<f64>,
    pub arcsine_ks: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kumaraswamy: Option<KumaraswamySummary>,
    pub sample: SampleSpec,
    pub histogram: DensitySummary,
    pub integer_thresholds: IntegerSubset,
}

/// Runs the full statistics pipeline on one interpolated profile.
pub fn analyze(
    spline: &InterpolatedProfile,
    kind: ProfileKind,
    trace: TraceSpec,
    cfg: &StatsConfig,
) -> Result<StatsReport, ReportError> {
    let fit = fit_arcsine(spline, kind);
    let model = fit.model;
    let sample = deviation_series(spline, kind, cfg.n, cfg.seed, cfg.parallelism)?;
    let values = value_series(spline, cfg.n, cfg.seed, cfg.parallelism)?;
    let hist = Histogram::of_values(&values, cfg.bins)?;
    let ekind = kind.exceedance_kind();

    let thresholds = match &cfg.thresholds {
        Some(t) => t.clone(),
        None => threshold_grid(model.delta_t, THRESHOLD_STEP),
    };
    let emp = exceedance(&sample, &thresholds, ekind)?;
    let arc = thresholds.iter().map(|&t| model.ccdf(t)).collect::<Result<Vec<_>, _>>()?;
    let arcsine_ks = ks_statistic(&sample, |t| model.ccdf(t.max(0.0)).unwrap_or(0.0))?;

    let kumaraswamy = if cfg.kumaraswamy {
        let k = fit_kumaraswamy(&sample)?;
        let ks = ks_statistic(&sample, |t| k.ccdf(t))?;
        Some(KumaraswamySummary { a: k.a, b: k.b, ks })
    } else {
        None
    };

    let top = model.delta_t.ceil().max(COMPARISON_THRESHOLDS[COMPARISON_THRESHOLDS.len() - 1]);
    let ints: Vec<f64> = (1..=top as usize).map(|k| k as f64).collect();
    let int_emp = exceedance(&sample, &ints, ekind)?;
    let int_arc = ints.iter().map(|&t| model.ccdf(t)).collect::<Result<Vec<_>, _>>()?;

    let report = StatsReport {
        style: spline.style.clone(),
        kind: ekind,
        trace,
        period_mil: spline.period,
        delta_t_ps_per_in: model.delta_t,
        alpha: model.alpha,
        mean_ps_per_in: spline.mean,
        thresholds,
        empirical_exceedance: emp.probability,
        arcsine_exceedance: arc,
        arcsine_ks,
        kumaraswamy,
        sample: SampleSpec {
            n: cfg.n,
            bins: cfg.bins,
            seed: cfg.seed,
        },
        histogram: DensitySummary {
            u_shaped: hist.is_u_shaped(),
            edges: hist.edges,
            density: hist.density,
        },
        integer_thresholds: IntegerSubset {
            thresholds: ints,
            empirical: int_emp.probability,
            arcsine: int_arc,
        },
    };
    Ok(report)
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value, String> {
    v.get(key).ok_or_else(|| format!("missing field {key}"))
}

fn number(v: &Value, key: &str) -> Result<f64, String> {
    field(v, key)?
        .as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("{key} must be a finite number"))
}

fn numbers(v: &Value, key: &str) -> Result<Vec<f64>, String> {
    field(v, key)?
        .as_array()
        .ok_or_else(|| format!("{key} must be an array"))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| format!("{key} must hold numbers")))
        .collect()
}

fn probabilities(v: &Value, key: &str, len: usize) -> Result<(), String> {
    let p = numbers(v, key)?;
    if p.len() != len {
        return Err(format!("{key} has {} entries, thresholds has {len}", p.len()));
    }
    if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(format!("{key} must lie in [0, 1]"));
    }
    if p.windows(2).any(|w| w[1] > w[0]) {
        return Err(format!("{key} must be non-increasing"));
    }
    Ok(())
}

/// Checks a report document against the report schema.
pub fn check_schema(v: &Value) -> Result<(), String> {
    field(v, "style")?.as_str().ok_or("style must be a string")?;
    match field(v, "kind")?.as_str() {
        Some("DDE") | Some("DSE") => {}
        _ => return Err("kind must be \"DDE\" or \"DSE\"".into()),
    }
    let trace = field(v, "trace")?;
    if !(number(trace, "w")? > 0.0) {
        return Err("trace.w must be positive".into());
    }
    let s = field(trace, "s")?;
    if !(s.is_null() || s.as_f64().is_some_and(|x| x > 0.0)) {
        return Err("trace.s must be null or positive".into());
    }
    if !(number(v, "period_mil")? > 0.0) {
        return Err("period_mil must be positive".into());
    }
    if !(number(v, "delta_t_ps_per_in")? >= 0.0) {
        return Err("delta_t_ps_per_in must be non-negative".into());
    }
    number(v, "alpha")?;
    number(v, "mean_ps_per_in")?;
    number(v, "arcsine_ks")?;
    let t = numbers(v, "thresholds")?;
    if t.iter().any(|x| !(*x >= 0.0)) || t.windows(2).any(|w| w[1] < w[0]) {
        return Err("thresholds must be non-negative and ascending".into());
    }
    probabilities(v, "empirical_exceedance", t.len())?;
    probabilities(v, "arcsine_exceedance", t.len())?;
    if let Some(k) = v.get("kumaraswamy") {
        if !(number(k, "a")? > 0.0 && number(k, "b")? > 0.0) {
            return Err("kumaraswamy.a and .b must be positive".into());
        }
        number(k, "ks")?;
    }
    let sample = field(v, "sample")?;
    for key in ["n", "bins", "seed"] {
        field(sample, key)?
            .as_u64()
            .ok_or_else(|| format!("sample.{key} must be an unsigned integer"))?;
    }
    let hist = field(v, "histogram")?;
    let edges = numbers(hist, "edges")?;
    let density = numbers(hist, "density")?;
    if edges.len() != density.len() + 1 {
        return Err("histogram needs one more edge than bins".into());
    }
    field(hist, "u_shaped")?.as_bool().ok_or("histogram.u_shaped must be a bool")?;
    let ints = field(v, "integer_thresholds")?;
    let it = numbers(ints, "thresholds")?;
    probabilities(ints, "empirical", it.len())?;
    probabilities(ints, "arcsine", it.len())?;
    Ok(())
}

impl StatsReport {
    /// Pretty JSON, checked against the schema before it is returned.
    pub fn to_json(&self) -> Result<String, ReportError> {
        let v = serde_json::to_value(self)?;
        check_schema(&v).map_err(ReportError::Schema)?;
        let mut s = serde_json::to_string_pretty(&v)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let v: Value = serde_json::from_str(text)?;
        check_schema(&v).map_err(ReportError::Schema)?;
        Ok(serde_json::from_value(v)?)
    }

    /// The exceedance grid as CSV.
    pub fn exceedance_csv(&self) -> String {
        let mut out = String::from("threshold_ps_per_in,empirical,arcsine\n");
        for i in 0..self.thresholds.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                sig(self.thresholds[i]),
                sig(self.empirical_exceedance[i]),
                sig(self.arcsine_exceedance[i])
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub style: String,
    pub delta_t: f64,
    pub empirical: Vec<f64>,
    pub arcsine: Vec<f64>,
}

/// Side-by-side exceedance at integer thresholds for several styles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub kind: ExceedanceKind,
    pub thresholds: Vec<f64>,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    /// Rows follow the order of `reports`. Values come from each report's
    /// integer-threshold subset, which always covers 1..=8.
    pub fn build(reports: &[StatsReport], thresholds: &[f64]) -> Result<Self, ReportError> {
        if reports.len() < 2 {
            return Err(ReportError::TooFewReports(reports.len()));
        }
        let kind = reports[0].kind;
        if let Some(r) = reports.iter().find(|r| r.kind != kind) {
            return Err(ReportError::MixedKinds(kind.label(), r.kind.label()));
        }
        let rows = reports
            .iter()
            .map(|r| {
                let pick = |t: f64, src: &[f64]| -> f64 {
                    let ints = &r.integer_thresholds;
                    match ints.thresholds.iter().position(|&x| x == t) {
                        Some(i) => src[i],
                        // Beyond the stored subset every value is above dt.
                        None => 0.0,
                    }
                };
                ComparisonRow {
                    style: r.style.clone(),
                    delta_t: r.delta_t_ps_per_in,
                    empirical: thresholds.iter().map(|&t| pick(t, &r.integer_thresholds.empirical)).collect(),
                    arcsine: thresholds.iter().map(|&t| pick(t, &r.integer_thresholds.arcsine)).collect(),
                }
            })
            .collect();
        Ok(Self {
            kind,
            thresholds: thresholds.to_vec(),
            rows,
        })
    }

    /// Index of the row with the smallest `delta_t`.
    pub fn smallest(&self) -> usize {
        (0..self.rows.len())
            .min_by(|&a, &b| self.rows[a].delta_t.total_cmp(&self.rows[b].delta_t))
            .unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("style,delta_t_ps_per_in");
        for t in &self.thresholds {
            out.push_str(&format!(",{k}_{t}_empirical,{k}_{t}_arcsine", k = self.kind.label()));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{}", r.style, sig(r.delta_t)));
            for (e, a) in r.empirical.iter().zip(&r.arcsine) {
                out.push_str(&format!(",{},{}", sig(*e), sig(*a)));
            }
            out.push('\n');
        }
        out
    }

    /// Fixed-width text table with percentages, empirical / arcsine.
    pub fn to_text(&self) -> String {
        let mut out = format!("{:<8} {:>9}", "style", "dt");
        for t in &self.thresholds {
            out.push_str(&format!(" {:>13}", format!("{} {t}", self.kind.label())));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{:<8} {:>9.4}", r.style, r.delta_t));
            for (e, a) in r.empirical.iter().zip(&r.arcsine) {
                out.push_str(&format!(" {:>13}", format!("{:.1}/{:.1}", 100.0 * e, 100.0 * a)));
            }
            out.push('\n');
        }
        out
    }
}
