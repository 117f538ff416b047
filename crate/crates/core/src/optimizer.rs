//! Array-shape search under a MAC budget, and the sweeps built on it.
//!
//! A budget of `N` MACs split over `l` tiers gives every tier
//! `floor(N / l)` MACs; all tiers share one `rows x cols` shape with
//! `rows * cols <= floor(N / l)`.

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{ceil_div, latency_3d, ArrayShape, LatencyEstimate, ModelError, Workload};
use crate::workloads::{generate_random, RandomRanges, WorkloadError, WorkloadSet};

pub const DEFAULT_MAX_TIERS: u64 = 16;

#[derive(Debug, PartialEq, Eq, Error)]
pub enum OptimizeError {
    #[error("budget of {macs} MACs leaves no MAC per tier for {tiers} tiers")]
    Infeasible { macs: u64, tiers: u64 },
    #[error("{tiers} tiers exceed the manufacturing cap of {max_tiers}")]
    TierCapExceeded { tiers: u64, max_tiers: u64 },
    #[error("MAC budget and tier cap must be at least 1")]
    InvalidBudget,
    #[error("tier range is empty")]
    EmptyTierRange,
    #[error("budget list is empty")]
    EmptyBudgetList,
    #[error("budget list must be strictly ascending ({prev} then {next})")]
    BudgetsNotAscending { prev: u64, next: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Budget {
    macs: u64,
    max_tiers: u64,
}

impl Budget {
    pub fn new(macs: u64) -> Result<Self, OptimizeError> {
        Self::with_max_tiers(macs, DEFAULT_MAX_TIERS)
    }

    pub fn with_max_tiers(macs: u64, max_tiers: u64) -> Result<Self, OptimizeError> {
        if macs == 0 || max_tiers == 0 {
            return Err(OptimizeError::InvalidBudget);
        }
        Ok(Self { macs, max_tiers })
    }

    pub fn macs(&self) -> u64 {
        self.macs
    }

    pub fn max_tiers(&self) -> u64 {
        self.max_tiers
    }

    pub fn macs_per_tier(&self, tiers: u64) -> u64 {
        self.macs / tiers
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPoint {
    pub shape: ArrayShape,
    pub estimate: LatencyEstimate,
    pub speedup_vs_2d: f64,
}

/// Smallest extent for every distinct fold count `ceil(dim / x)`, ascending.
///
/// For a fixed fold count the fold latency grows with the extent, so no
/// other extent can win; this keeps the search exact.
pub fn fold_minimal_extents(dim: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut x = 1;
    while x <= dim {
        out.push(x);
        let q = ceil_div(dim, x);
        if q == 1 {
            break;
        }
        x = ceil_div(dim, q - 1);
    }
    out
}

/// Best single shape with `rows * cols <= per_tier` on `tiers` tiers.
/// Ties go to fewer rows, then fewer columns.
fn best_shape(
    per_tier: u64,
    tiers: u64,
    w: &Workload,
) -> Result<(ArrayShape, LatencyEstimate), OptimizeError> {
    let cols = fold_minimal_extents(w.n());
    let mut best: Option<(ArrayShape, LatencyEstimate)> = None;
    for rows in fold_minimal_extents(w.m()) {
        if rows > per_tier {
            break;
        }
        for &c in &cols {
            if rows * c > per_tier {
                break;
            }
            let shape = ArrayShape::new(rows, c, tiers)?;
            let est = latency_3d(shape, w)?;
            if best.is_none_or(|(_, b)| est.total_cycles < b.total_cycles) {
                best = Some((shape, est));
            }
        }
    }
    // per_tier >= 1 guarantees the 1x1 shape was evaluated.
    Ok(best.expect("at least one feasible shape"))
}

fn check_tiers(budget: &Budget, tiers: u64, w: &Workload) -> Result<u64, OptimizeError> {
    if tiers == 0 {
        return Err(ModelError::ZeroDimension { what: "tiers" }.into());
    }
    if tiers > budget.max_tiers {
        return Err(OptimizeError::TierCapExceeded {
            tiers,
            max_tiers: budget.max_tiers,
        });
    }
    if tiers > w.k() {
        return Err(ModelError::TooManyTiers { tiers, k: w.k() }.into());
    }
    let per_tier = budget.macs_per_tier(tiers);
    if per_tier == 0 {
        return Err(OptimizeError::Infeasible {
            macs: budget.macs,
            tiers,
        });
    }
    Ok(per_tier)
}

fn point_against(
    budget: &Budget,
    tiers: u64,
    w: &Workload,
    baseline: Option<&LatencyEstimate>,
) -> Result<DesignPoint, OptimizeError> {
    let per_tier = check_tiers(budget, tiers, w)?;
    let (shape, estimate) = best_shape(per_tier, tiers, w)?;
    let speedup_vs_2d = match baseline {
        Some(b) => b.total_cycles as f64 / estimate.total_cycles as f64,
        None => 1.0,
    };
    Ok(DesignPoint {
        shape,
        estimate,
        speedup_vs_2d,
    })
}

/// Latency-optimal per-tier shape for `tiers` tiers sharing `budget`.
/// `speedup_vs_2d` compares against the optimal planar array with the
/// same budget.
pub fn optimize_shape(budget: &Budget, tiers: u64, w: &Workload) -> Result<DesignPoint, OptimizeError> {
    let baseline = point_against(budget, 1, w, None)?;
    if tiers == 1 {
        return Ok(baseline);
    }
    point_against(budget, tiers, w, Some(&baseline.estimate))
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepEntry {
    Point(DesignPoint),
    /// Configuration that cannot be built (empty tiers, no MACs per tier).
    Skipped { reason: String },
}

impl SweepEntry {
    pub fn point(&self) -> Option<&DesignPoint> {
        match self {
            SweepEntry::Point(p) => Some(p),
            SweepEntry::Skipped { .. } => None,
        }
    }
}

fn entry(result: Result<DesignPoint, OptimizeError>) -> Result<SweepEntry, OptimizeError> {
    match result {
        Ok(p) => Ok(SweepEntry::Point(p)),
        Err(e @ (OptimizeError::Infeasible { .. } | OptimizeError::Model(ModelError::TooManyTiers { .. }))) => {
            Ok(SweepEntry::Skipped {
                reason: e.to_string(),
            })
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TierSweep {
    pub budget: Budget,
    /// Optimal planar array every entry is normalized against.
    pub baseline: DesignPoint,
    pub entries: Vec<(u64, SweepEntry)>,
}

impl TierSweep {
    /// Highest-speedup entry; ties go to fewer tiers.
    pub fn best(&self) -> Option<(u64, &DesignPoint)> {
        self.entries
            .iter()
            .filter_map(|(t, e)| e.point().map(|p| (*t, p)))
            .fold(None, |acc: Option<(u64, &DesignPoint)>, (t, p)| match acc {
                Some((_, b)) if b.speedup_vs_2d >= p.speedup_vs_2d => acc,
                _ => Some((t, p)),
            })
    }
}

pub fn sweep_tiers(budget: &Budget, w: &Workload, tier_range: &[u64]) -> Result<TierSweep, OptimizeError> {
    if tier_range.is_empty() {
        return Err(OptimizeError::EmptyTierRange);
    }
    if let Some(&tiers) = tier_range.iter().find(|&&t| t > budget.max_tiers) {
        return Err(OptimizeError::TierCapExceeded {
            tiers,
            max_tiers: budget.max_tiers,
        });
    }
    let baseline = point_against(budget, 1, w, None)?;
    let entries = tier_range
        .par_iter()
        .map(|&t| entry(point_against(budget, t, w, Some(&baseline.estimate))).map(|e| (t, e)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TierSweep {
        budget: *budget,
        baseline,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetEntry {
    pub macs: u64,
    pub baseline: DesignPoint,
    pub entry: SweepEntry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSweep {
    pub tiers: u64,
    pub entries: Vec<BudgetEntry>,
    /// Smallest swept budget where the stacked array beats the planar one.
    pub first_speedup_budget: Option<u64>,
    /// `M * N`: the stacked array needs strictly more MACs than this.
    pub analytic_threshold: u64,
}

pub fn sweep_budget(tiers: u64, w: &Workload, budgets: &[u64]) -> Result<BudgetSweep, OptimizeError> {
    if budgets.is_empty() {
        return Err(OptimizeError::EmptyBudgetList);
    }
    for pair in budgets.windows(2) {
        if pair[1] <= pair[0] {
            return Err(OptimizeError::BudgetsNotAscending {
                prev: pair[0],
                next: pair[1],
            });
        }
    }
    let entries = budgets
        .par_iter()
        .map(|&macs| {
            let budget = Budget::with_max_tiers(macs, DEFAULT_MAX_TIERS.max(tiers))?;
            let baseline = point_against(&budget, 1, w, None)?;
            let entry = entry(point_against(&budget, tiers, w, Some(&baseline.estimate)))?;
            Ok(BudgetEntry {
                macs,
                baseline,
                entry,
            })
        })
        .collect::<Result<Vec<_>, OptimizeError>>()?;
    let first_speedup_budget = entries
        .iter()
        .find(|e| e.entry.point().is_some_and(|p| p.speedup_vs_2d > 1.0))
        .map(|e| e.macs);
    Ok(BudgetSweep {
        tiers,
        entries,
        first_speedup_budget,
        analytic_threshold: w.m() * w.n(),
    })
}

/// Tier count with the lowest optimized latency. Ties are broken on
/// (latency, rows, cols, tiers).
pub fn optimal_tiers(budget: &Budget, w: &Workload) -> Result<DesignPoint, OptimizeError> {
    let top = budget.max_tiers.min(w.k()).min(budget.macs);
    let baseline = point_against(budget, 1, w, None)?;
    let mut best = baseline;
    for tiers in 2..=top {
        let p = point_against(budget, tiers, w, Some(&baseline.estimate))?;
        let key = |d: &DesignPoint| {
            (
                d.estimate.total_cycles,
                d.shape.rows(),
                d.shape.cols(),
                d.shape.tiers(),
            )
        };
        if key(&p) < key(&best) {
            best = p;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetOptima {
    pub macs: u64,
    /// Optimal tier count per workload, in workload order.
    pub optimal_tiers: Vec<u64>,
    /// Optimal design point per workload, in workload order.
    pub points: Vec<DesignPoint>,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TierStudy {
    pub workloads: WorkloadSet,
    pub per_budget: Vec<BudgetOptima>,
}

pub fn median(values: &[u64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Distribution of the optimal tier count over `workloads` for each budget.
pub fn optimal_tiers_for(
    workloads: WorkloadSet,
    budgets: &[u64],
    max_tiers: u64,
) -> Result<TierStudy, OptimizeError> {
    if budgets.is_empty() {
        return Err(OptimizeError::EmptyBudgetList);
    }
    let per_budget = budgets
        .iter()
        .map(|&macs| {
            let budget = Budget::with_max_tiers(macs, max_tiers)?;
            let points = workloads
                .entries()
                .par_iter()
                .map(|w| optimal_tiers(&budget, w))
                .collect::<Result<Vec<_>, _>>()?;
            let optimal_tiers: Vec<u64> = points.iter().map(|p| p.shape.tiers()).collect();
            Ok(BudgetOptima {
                macs,
                median: median(&optimal_tiers),
                optimal_tiers,
                points,
            })
        })
        .collect::<Result<Vec<_>, OptimizeError>>()?;
    Ok(TierStudy {
        workloads,
        per_budget,
    })
}

/// Optimal-tier study over `n_workloads` random layers drawn with the
/// default ranges.
pub fn optimal_tier_study(
    n_workloads: usize,
    budgets: &[u64],
    rng_seed: u64,
) -> Result<TierStudy, OptimizeError> {
    let set = generate_random(n_workloads, &RandomRanges::default(), rng_seed)?;
    optimal_tiers_for(set, budgets, DEFAULT_MAX_TIERS)
}
