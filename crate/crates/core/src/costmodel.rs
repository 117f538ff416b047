//! Silicon area of planar and stacked arrays, and performance per area.
//!
//! Worst-case vertical provisioning: every MAC pile has one link array per
//! inter-tier gap. The link array is charged to the upper tier of each gap,
//! so the bottom tier carries none.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{ArrayShape, Workload};
use crate::optimizer::{optimize_shape, Budget, DesignPoint, OptimizeError};

#[derive(Debug, Error)]
pub enum CostError {
    #[error("a {tiers}-tier array cannot use {link} links")]
    InvalidLink { tiers: u64, link: LinkKind },
    #[error("invalid technology parameters: {0}")]
    InvalidParams(String),
    #[error("line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkKind {
    None,
    Tsv,
    Miv,
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkKind::None => "none",
            LinkKind::Tsv => "tsv",
            LinkKind::Miv => "miv",
        })
    }
}

impl FromStr for LinkKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(LinkKind::None),
            "tsv" => Ok(LinkKind::Tsv),
            "miv" => Ok(LinkKind::Miv),
            other => Err(format!("unknown link kind {other:?} (expected none, tsv or miv)")),
        }
    }
}

/// Areas in µm².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TechParams {
    pub mac_area: f64,
    /// One vertical link array including its keep-out zone.
    pub tsv_array_area: f64,
    pub miv_array_area: f64,
    /// Extra logic per tier of a stacked array, as a fraction.
    pub fixed_overhead_3d: f64,
}

impl TechParams {
    pub const KEYS: [&'static str; 4] = ["mac_area", "tsv_array_area", "miv_array_area", "fixed_overhead_3d"];

    /// Placeholder constants, not measured values.
    pub fn placeholder() -> Self {
        Self {
            mac_area: 200.0,
            tsv_array_area: 600.0,
            miv_array_area: 20.0,
            fixed_overhead_3d: 0.02,
        }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let fields = [
            ("mac_area", self.mac_area),
            ("tsv_array_area", self.tsv_array_area),
            ("miv_array_area", self.miv_array_area),
            ("fixed_overhead_3d", self.fixed_overhead_3d),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(CostError::InvalidParams(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.mac_area == 0.0 {
            return Err(CostError::InvalidParams("mac_area must be > 0".into()));
        }
        if self.miv_array_area > self.tsv_array_area {
            return Err(CostError::InvalidParams(format!(
                "miv_array_area ({}) exceeds tsv_array_area ({})",
                self.miv_array_area, self.tsv_array_area
            )));
        }
        Ok(())
    }

    fn link_area(&self, link: LinkKind) -> f64 {
        match link {
            LinkKind::None => 0.0,
            LinkKind::Tsv => self.tsv_array_area,
            LinkKind::Miv => self.miv_array_area,
        }
    }

    /// Parses `key = value` lines; `#` starts a comment. Every key is
    /// required and unknown keys are rejected.
    pub fn from_config_str(text: &str) -> Result<Self, CostError> {
        let mut values: [Option<f64>; 4] = [None; 4];
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| CostError::Config {
                line,
                msg: format!("expected `key = value`, got {body:?}"),
            })?;
            let key = key.trim();
            let slot = Self::KEYS
                .iter()
                .position(|&k| k == key)
                .ok_or_else(|| CostError::Config {
                    line,
                    msg: format!("unknown key `{key}`"),
                })?;
            if values[slot].is_some() {
                return Err(CostError::Config {
                    line,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            let value = value.trim();
            values[slot] = Some(value.parse().map_err(|_| CostError::Config {
                line,
                msg: format!("`{key}` is not a number: {value:?}"),
            })?);
        }
        let get = |i: usize| values[i].ok_or(CostError::MissingKey(Self::KEYS[i]));
        let params = Self {
            mac_area: get(0)?,
            tsv_array_area: get(1)?,
            miv_array_area: get(2)?,
            fixed_overhead_3d: get(3)?,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CostError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CostError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_config_str(&text)
    }

    pub fn to_config_string(&self) -> String {
        format!(
            "mac_area = {}\ntsv_array_area = {}\nmiv_array_area = {}\nfixed_overhead_3d = {}\n",
            self.mac_area, self.tsv_array_area, self.miv_array_area, self.fixed_overhead_3d
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackArea {
    /// Bottom tier first.
    pub per_tier: Vec<f64>,
    /// Largest single tier.
    pub footprint: f64,
    pub total_silicon: f64,
}

/// Area of `tiers` identical tiers with `macs_per_tier` MACs each.
pub fn stack_area(macs_per_tier: u64, tiers: u64, link: LinkKind, tech: &TechParams) -> Result<StackArea, CostError> {
    tech.validate()?;
    if (tiers == 1) != (link == LinkKind::None) {
        return Err(CostError::InvalidLink { tiers, link });
    }
    let overhead = if tiers > 1 { 1.0 + tech.fixed_overhead_3d } else { 1.0 };
    let macs = macs_per_tier as f64;
    let per_tier: Vec<f64> = (0..tiers)
        .map(|t| {
            let links = if t > 0 { tech.link_area(link) } else { 0.0 };
            macs * (tech.mac_area + links) * overhead
        })
        .collect();
    let footprint = per_tier.iter().copied().fold(0.0, f64::max);
    let total_silicon = per_tier.iter().sum();
    Ok(StackArea {
        per_tier,
        footprint,
        total_silicon,
    })
}

pub fn area(shape: ArrayShape, link: LinkKind, tech: &TechParams) -> Result<StackArea, CostError> {
    stack_area(shape.macs_per_tier(), shape.tiers(), link, tech)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaReport {
    pub footprint: f64,
    pub total_silicon: f64,
    pub perf_per_area_vs_2d: f64,
    pub stacked: DesignPoint,
    pub planar: DesignPoint,
    pub planar_silicon: f64,
}

/// Performance per silicon area of the optimized stacked array, relative to
/// the optimized planar array with the same MAC budget.
///
/// Silicon is charged for everything the budget provisions (`floor(N/l)`
/// MACs per tier), not only the sub-array the workload happens to use. A
/// single-tier request has no vertical links, so `link` is ignored there.
pub fn perf_per_area(
    w: &Workload,
    budget: &Budget,
    tiers: u64,
    link: LinkKind,
    tech: &TechParams,
) -> Result<AreaReport, CostError> {
    let link = if tiers == 1 { LinkKind::None } else { link };
    let stacked = optimize_shape(budget, tiers, w)?;
    let planar = optimize_shape(budget, 1, w)?;
    let stack = stack_area(budget.macs_per_tier(tiers), tiers, link, tech)?;
    let flat = stack_area(budget.macs(), 1, LinkKind::None, tech)?;

    let perf3 = 1.0 / stacked.estimate.total_cycles as f64 / stack.total_silicon;
    let perf2 = 1.0 / planar.estimate.total_cycles as f64 / flat.total_silicon;
    Ok(AreaReport {
        footprint: stack.footprint,
        total_silicon: stack.total_silicon,
        perf_per_area_vs_2d: perf3 / perf2,
        stacked,
        planar,
        planar_silicon: flat.total_silicon,
    })
}
