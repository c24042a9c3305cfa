//! On-disk cache of sweep results. One file per (model, layout, sweep config),
//! named by a SHA-256 of their serialized form plus [`SOLVER_VERSION`]. A file is
//! a block of `# key: value` metadata lines followed by the sweep CSV.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::lattice::{LatticeModel, TraceKind, TraceLayout};
use crate::numfmt::sig;
use crate::sweep::{DelayProfile, SkewProfile, SweepConfig};

/// Bumped whenever a solver change can alter results, so stale entries miss.
pub const SOLVER_VERSION: &str = concat!("fiberweave-", env!("CARGO_PKG_VERSION"), "/fv-mgpcg-slab-1");

/// Environment variable that overrides the cache location.
pub const CACHE_ENV: &str = "FWE_CACHE_DIR";

#[derive(Serialize)]
struct KeyInput<'a> {
    solver: &'a str,
    model: &'a LatticeModel,
    layout: &'a TraceLayout,
    config: &'a SweepConfig,
}

/// Hex SHA-256 identifying one sweep.
pub fn cache_key(model: &LatticeModel, layout: &TraceLayout, cfg: &SweepConfig) -> String {
    let input = KeyInput {
        solver: SOLVER_VERSION,
        model,
        layout,
        config: cfg,
    };
    let json = serde_json::to_string(&input).expect("key input serializes");
    Sha256::digest(json.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

fn list(values: &[f64]) -> String {
    values.iter().map(|v| sig(*v)).collect::<Vec<_>>().join(";")
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split(';').map(|v| v.trim().parse().ok()).collect()
}

fn kind_tag(kind: TraceKind) -> &'static str {
    match kind {
        TraceKind::Single => "single",
        TraceKind::Differential => "diff",
    }
}

/// Splits a cache file into its metadata and CSV payload.
fn split_entry(text: &str) -> (BTreeMap<String, String>, String) {
    let mut meta = BTreeMap::new();
    let mut payload = String::new();
    for line in text.lines() {
        match line.strip_prefix("# ").and_then(|l| l.split_once(": ")) {
            Some((k, v)) if payload.is_empty() => {
                meta.insert(k.to_string(), v.to_string());
            }
            _ => {
                payload.push_str(line);
                payload.push('\n');
            }
        }
    }
    (meta, payload)
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// `FWE_CACHE_DIR` if set, otherwise `fallback`.
    pub fn from_env_or(fallback: impl Into<PathBuf>) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Self::new(d),
            _ => Self::new(fallback),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, model: &LatticeModel, layout: &TraceLayout, cfg: &SweepConfig) -> PathBuf {
        let key = cache_key(model, layout, cfg);
        let style: String = model
            .style
            .name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        self.dir
            .join(format!("{style}-{}-{}.csv", kind_tag(layout.kind), &key[..16]))
    }

    fn read(&self, model: &LatticeModel, layout: &TraceLayout, cfg: &SweepConfig) -> Option<(BTreeMap<String, String>, String)> {
        let text = fs::read_to_string(self.path_for(model, layout, cfg)).ok()?;
        let (meta, payload) = split_entry(&text);
        // A truncated prefix collision or a foreign file must not be trusted.
        if meta.get("key")? != &cache_key(model, layout, cfg) {
            return None;
        }
        Some((meta, payload))
    }

    /// Writes through a temporary file and a rename so readers never see a
    /// partial entry.
    fn write(&self, path: &Path, meta: &[(&str, String)], payload: &str) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let mut body = String::new();
        for (k, v) in meta {
            body.push_str(&format!("# {k}: {v}\n"));
        }
        body.push_str(payload);
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(body.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)
    }

    fn common_meta(model: &LatticeModel, layout: &TraceLayout, cfg: &SweepConfig) -> Vec<(&'static str, String)> {
        vec![
            ("key", cache_key(model, layout, cfg)),
            ("solver", SOLVER_VERSION.to_string()),
            ("style", model.style.name.clone()),
            ("kind", kind_tag(layout.kind).to_string()),
            ("w", sig(layout.w)),
            ("s", sig(layout.s)),
            ("period", sig(model.style.y3)),
        ]
    }

    pub fn load_single(&self, model: &LatticeModel, layout: &TraceLayout, cfg: &SweepConfig) -> Option<DelayProfile> {
        let (meta, payload) = self.read(model, layout, cfg)?;
        let mut p = DelayProfile::from_csv(&payload, &model.style.name, layout.w, model.style.y3).ok()?;
        let z0_min = parse_list(meta.get("z0_min")?)?;
        let z0_max = parse_list(meta.get("z0_max")?)?;
        if z0_min.len() != p.offsets.len() || z0_max.len() != p.offsets.len() {
            return None;
        }
        p.z0_min = z0_min;
        p.z0_max = z0_max;
        Some(p)
    }

    pub fn store_single(
        &self,
        model: &LatticeModel,
        layout: &TraceLayout,
        cfg: &SweepConfig,
        p: &DelayProfile,
    ) -> std::io::Result<PathBuf> {
        let path = self.path_for(model, layout, cfg);
        let mut meta = Self::common_meta(model, layout, cfg);
        meta.push(("z0_min", list(&p.z0_min)));
        meta.push(("z0_max", list(&p.z0_max)));
        self.write(&path, &meta, &p.to_csv())?;
        Ok(path)
    }

    pub fn load_diff(&self, model: &LatticeModel, layout: &TraceLayout, cfg: &SweepConfig) -> Option<SkewProfile> {
        let (_, payload) = self.read(model, layout, cfg)?;
        SkewProfile::from_csv(&payload, &model.style.name, layout.w, layout.s, model.style.y3).ok()
    }

    pub fn store_diff(
        &self,
        model: &LatticeModel,
        layout: &TraceLayout,
        cfg: &SweepConfig,
        p: &SkewProfile,
    ) -> std::io::Result<PathBuf> {
        let path = self.path_for(model, layout, cfg);
        let meta = Self::common_meta(model, layout, cfg);
        self.write(&path, &meta, &p.to_csv())?;
        Ok(path)
    }
}
