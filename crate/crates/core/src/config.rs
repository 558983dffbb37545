//! Run configuration files.
//!
//! ```toml
//! [structure]
//! u = "0"
//! P11 = "x*y"
//! P12 = "(y*y - x*x)/2"
//! P22 = "-x*y"
//!
//! [region]
//! xmin = -2.0
//! xmax = 2.0
//! ymin = -2.0
//! ymax = 2.0
//! nx = 21
//! ny = 21
//!
//! [tolerances]
//! root = 1e-7
//!
//! [options]
//! mode = "real"
//! orientation = 1
//! points = "1,0; 0.5,0.5"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analyzer::{GridSpec, Mode};
use crate::error::{Error, Result};
use crate::geom::{MoebiusStructure, Orientation};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSource {
    #[serde(default = "zero_source")]
    pub u: String,
    #[serde(rename = "P11")]
    pub p11: String,
    #[serde(rename = "P12")]
    pub p12: String,
    #[serde(rename = "P22")]
    pub p22: String,
}

fn zero_source() -> String {
    "0".into()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    mode: Option<Mode>,
    orientation: Option<i64>,
    jet_order: Option<usize>,
    points: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    structure: StructureSource,
    region: Option<GridSpec>,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    options: RawOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub structure: StructureSource,
    pub region: Option<GridSpec>,
    pub points: Option<Vec<[f64; 2]>>,
    pub tolerances: Tolerances,
    pub mode: Mode,
    pub orientation: Orientation,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let orientation = match raw.options.orientation {
            None => Orientation::Positive,
            Some(v) => Orientation::from_sign(v)
                .ok_or_else(|| Error::Config(format!("orientation must be 1 or -1, got {v}")))?,
        };
        let mut tolerances = raw.tolerances;
        if let Some(j) = raw.options.jet_order {
            tolerances.jet_order = j;
        }
        let points = raw
            .options
            .points
            .as_deref()
            .map(parse_points)
            .transpose()?;
        let cfg = RunConfig {
            structure: raw.structure,
            region: raw.region,
            points,
            tolerances,
            mode: raw.options.mode.unwrap_or_default(),
            orientation,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        if let Some(g) = &self.region {
            validate_grid(g)?;
        }
        if self.region.is_none() && self.points.is_none() {
            return Err(Error::Config(
                "either a [region] section or options.points is required".into(),
            ));
        }
        Ok(())
    }

    /// Parses the four expressions; errors here are expression errors.
    pub fn structure(&self) -> Result<MoebiusStructure> {
        let s = &self.structure;
        Ok(MoebiusStructure::parse(&s.u, &s.p11, &s.p12, &s.p22)?
            .with_orientation(self.orientation))
    }

    /// Explicit points when given, otherwise the region's grid nodes.
    pub fn sample_points(&self) -> Vec<[f64; 2]> {
        match (&self.points, &self.region) {
            (Some(p), _) => p.clone(),
            (None, Some(g)) => g.nodes(),
            (None, None) => Vec::new(),
        }
    }
}

fn validate_grid(g: &GridSpec) -> Result<()> {
    let finite = [g.xmin, g.xmax, g.ymin, g.ymax]
        .iter()
        .all(|v| v.is_finite());
    if !finite {
        return Err(Error::Config("region bounds must be finite".into()));
    }
    if !(g.xmin < g.xmax) || !(g.ymin < g.ymax) {
        return Err(Error::Config(format!(
            "region must satisfy xmin < xmax and ymin < ymax, got [{}, {}] x [{}, {}]",
            g.xmin, g.xmax, g.ymin, g.ymax
        )));
    }
    if g.nx < 1 || g.ny < 1 {
        return Err(Error::Config(format!(
            "nx and ny must be at least 1, got {} x {}",
            g.nx, g.ny
        )));
    }
    if g.nx.saturating_mul(g.ny) > 4_000_000 {
        return Err(Error::Config(format!(
            "grid of {} x {} nodes is too large",
            g.nx, g.ny
        )));
    }
    Ok(())
}

/// Parses `"x,y; x,y; ..."`.
pub fn parse_points(s: &str) -> Result<Vec<[f64; 2]>> {
    let mut out = Vec::new();
    for (k, item) in s.split(';').enumerate() {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let coords: Vec<&str> = item.split(',').map(str::trim).collect();
        let bad = || Error::Config(format!("point {} `{item}` is not of the form x,y", k + 1));
        if coords.len() != 2 {
            return Err(bad());
        }
        let x: f64 = coords[0].parse().map_err(|_| bad())?;
        let y: f64 = coords[1].parse().map_err(|_| bad())?;
        if !x.is_finite() || !y.is_finite() {
            return Err(bad());
        }
        out.push([x, y]);
    }
    if out.is_empty() {
        return Err(Error::Config("no points given".into()));
    }
    Ok(out)
}
