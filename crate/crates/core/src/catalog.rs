//! Fabric catalogs: named bundle dimensions with optional per-style laminate
//! overrides, stored as TOML.
//!
//! ```toml
//! [[style]]
//! name = "1035"
//! x1 = 0.8
//! x2 = 9.0
//! x3 = 14.0
//! y1 = 0.8
//! y2 = 12.0
//! y3 = 14.0
//! # optional: h, t, eps_glass, eps_resin
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{FabricStyle, Laminate, LatticeError, LatticeModel};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read catalog {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed catalog at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("invalid catalog row {index} ({name}): {source}")]
    InvalidRow {
        index: usize,
        name: String,
        source: LatticeError,
    },
    #[error("duplicate style name {0}")]
    Duplicate(String),
    #[error("unknown style {name}; available: {available}")]
    Unknown { name: String, available: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    name: String,
    x1: f64,
    x2: f64,
    x3: f64,
    y1: f64,
    y2: f64,
    y3: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps_glass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps_resin: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    #[serde(default)]
    style: Vec<Record>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub style: FabricStyle,
    pub laminate: Laminate,
}

impl CatalogEntry {
    pub fn model(&self) -> LatticeModel {
        LatticeModel::new(self.style.clone(), self.laminate).expect("catalog entries are validated on load")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Catalog {
    pub entries: Vec<CatalogEntry>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl Catalog {
    /// The four reference styles on the default laminate.
    pub fn builtin() -> Self {
        Self {
            entries: FabricStyle::builtin()
                .into_iter()
                .map(|style| CatalogEntry {
                    style,
                    laminate: Laminate::default(),
                })
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        let file: CatalogFile = toml::from_str(text).map_err(|e| CatalogError::Malformed {
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(1),
            message: e.message().to_string(),
        })?;
        let mut entries: Vec<CatalogEntry> = Vec::with_capacity(file.style.len());
        for (i, r) in file.style.into_iter().enumerate() {
            let style = FabricStyle::new(r.name.clone(), [r.x1, r.x2, r.x3], [r.y1, r.y2, r.y3]);
            let d = Laminate::default();
            let laminate = Laminate {
                h: r.h.unwrap_or(d.h),
                t: r.t.unwrap_or(d.t),
                eps_glass: r.eps_glass.unwrap_or(d.eps_glass),
                eps_resin: r.eps_resin.unwrap_or(d.eps_resin),
            };
            LatticeModel::new(style.clone(), laminate).map_err(|source| CatalogError::InvalidRow {
                index: i + 1,
                name: r.name.clone(),
                source,
            })?;
            if entries.iter().any(|e| e.style.name == r.name) {
                return Err(CatalogError::Duplicate(r.name));
            }
            entries.push(CatalogEntry { style, laminate });
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CatalogError> {
        let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        let d = Laminate::default();
        let differs = |a: f64, b: f64| (a != b).then_some(a);
        let file = CatalogFile {
            style: self
                .entries
                .iter()
                .map(|e| Record {
                    name: e.style.name.clone(),
                    x1: e.style.x1,
                    x2: e.style.x2,
                    x3: e.style.x3,
                    y1: e.style.y1,
                    y2: e.style.y2,
                    y3: e.style.y3,
                    h: differs(e.laminate.h, d.h),
                    t: differs(e.laminate.t, d.t),
                    eps_glass: differs(e.laminate.eps_glass, d.eps_glass),
                    eps_resin: differs(e.laminate.eps_resin, d.eps_resin),
                })
                .collect(),
        };
        toml::to_string(&file).expect("catalog serializes")
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.style.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&CatalogEntry, CatalogError> {
        self.entries
            .iter()
            .find(|e| e.style.name == name)
            .ok_or_else(|| CatalogError::Unknown {
                name: name.into(),
                available: self.names().join(", "),
            })
    }

    /// Entries in the requested order; `["all"]` selects every entry.
    pub fn select(&self, names: &[String]) -> Result<Vec<&CatalogEntry>, CatalogError> {
        if names.len() == 1 && names[0] == "all" {
            return Ok(self.entries.iter().collect());
        }
        names.iter().map(|n| self.get(n)).collect()
    }
}
