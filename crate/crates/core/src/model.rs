//! Closed-form latency of output-stationary systolic arrays.
//!
//! A planar array of `R x C` MACs runs a GEMM `A(M x K) * B(K x N)` in
//! `ceil(M/R) * ceil(N/C)` serial folds. Each fold costs
//!
//! ```text
//! (R + C - 2)        fill: skewed operands reach the far corner
//! + K                compute: in-place accumulation
//! + R                drain: outputs leave one row per cycle
//! ```
//!
//! A stack of `l` identical tiers splits `K` across the tiers, so the
//! compute term becomes `ceil(K/l)` and the piles spend `l - 1` extra cycles
//! combining partial sums on the way down to the bottom tier.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{what} must be at least 1")]
    ZeroDimension { what: &'static str },
    #[error("planar latency needs a single-tier shape, got {tiers} tiers")]
    NotPlanar { tiers: u64 },
    #[error("{tiers} tiers exceed the inner dimension K={k}; some tiers would receive no partial-sum slice")]
    TooManyTiers { tiers: u64, k: u64 },
    #[error("cannot split extent {extent} of dimension {dim} across {tiers} tiers")]
    SplitTooSmall {
        dim: SplitDim,
        extent: u64,
        tiers: u64,
    },
    #[error("latency estimate has zero cycles")]
    ZeroCycles,
}

pub(crate) fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// A GEMM instance `A(M x K) * B(K x N)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Workload {
    name: String,
    m: u64,
    k: u64,
    n: u64,
}

impl Workload {
    pub fn new(name: impl Into<String>, m: u64, k: u64, n: u64) -> Result<Self, ModelError> {
        for (what, v) in [("M", m), ("K", k), ("N", n)] {
            if v == 0 {
                return Err(ModelError::ZeroDimension { what });
            }
        }
        Ok(Self {
            name: name.into(),
            m,
            k,
            n,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl fmt::Display for Workload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(M={}, K={}, N={})", self.name, self.m, self.k, self.n)
    }
}

/// Rows and columns per tier, and the number of stacked tiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArrayShape {
    rows: u64,
    cols: u64,
    tiers: u64,
}

impl ArrayShape {
    pub fn new(rows: u64, cols: u64, tiers: u64) -> Result<Self, ModelError> {
        for (what, v) in [("rows", rows), ("cols", cols), ("tiers", tiers)] {
            if v == 0 {
                return Err(ModelError::ZeroDimension { what });
            }
        }
        Ok(Self { rows, cols, tiers })
    }

    pub fn planar(rows: u64, cols: u64) -> Result<Self, ModelError> {
        Self::new(rows, cols, 1)
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn cols(&self) -> u64 {
        self.cols
    }

    pub fn tiers(&self) -> u64 {
        self.tiers
    }

    pub fn macs_per_tier(&self) -> u64 {
        self.rows * self.cols
    }

    pub fn mac_count(&self) -> u64 {
        self.rows * self.cols * self.tiers
    }

    pub fn is_planar(&self) -> bool {
        self.tiers == 1
    }

    /// Number of serial folds needed to cover an `m x n` output.
    pub fn folds(&self, m: u64, n: u64) -> u64 {
        ceil_div(m, self.rows) * ceil_div(n, self.cols)
    }
}

impl fmt::Display for ArrayShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.rows, self.cols, self.tiers)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatencyEstimate {
    pub total_cycles: u64,
    pub folds: u64,
    pub fold_cycles: u64,
    pub fill_cycles: u64,
    pub compute_cycles: u64,
    pub reduce_cycles: u64,
    pub drain_cycles: u64,
}

impl LatencyEstimate {
    fn from_parts(folds: u64, fill: u64, compute: u64, reduce: u64, drain: u64) -> Self {
        let fold_cycles = fill + compute + reduce + drain;
        Self {
            total_cycles: fold_cycles * folds,
            folds,
            fold_cycles,
            fill_cycles: fill,
            compute_cycles: compute,
            reduce_cycles: reduce,
            drain_cycles: drain,
        }
    }
}

/// Dimension split across tiers by the scale-out baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitDim {
    M,
    N,
}

impl fmt::Display for SplitDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitDim::M => f.write_str("M"),
            SplitDim::N => f.write_str("N"),
        }
    }
}

/// Latency of a planar output-stationary array.
pub fn latency_2d(shape: ArrayShape, w: &Workload) -> Result<LatencyEstimate, ModelError> {
    if !shape.is_planar() {
        return Err(ModelError::NotPlanar { tiers: shape.tiers });
    }
    latency_3d(shape, w)
}

/// Latency of a stacked array running the distributed output-stationary
/// dataflow. Reduces exactly to [`latency_2d`] for one tier.
pub fn latency_3d(shape: ArrayShape, w: &Workload) -> Result<LatencyEstimate, ModelError> {
    let tiers = shape.tiers;
    if tiers > w.k {
        return Err(ModelError::TooManyTiers { tiers, k: w.k });
    }
    let (r, c) = (shape.rows, shape.cols);
    Ok(LatencyEstimate::from_parts(
        shape.folds(w.m, w.n),
        r + c - 2,
        ceil_div(w.k, tiers),
        tiers - 1,
        r,
    ))
}

/// Independent planar arrays on each tier, with the workload split along
/// `M` or `N`. There is no inter-tier traffic, so no reduction term.
pub fn latency_scaleout(
    per_tier_shape: ArrayShape,
    tiers: u64,
    w: &Workload,
    split_dim: SplitDim,
) -> Result<LatencyEstimate, ModelError> {
    if tiers == 0 {
        return Err(ModelError::ZeroDimension { what: "tiers" });
    }
    let extent = match split_dim {
        SplitDim::M => w.m,
        SplitDim::N => w.n,
    };
    if extent < tiers {
        return Err(ModelError::SplitTooSmall {
            dim: split_dim,
            extent,
            tiers,
        });
    }
    let share = ceil_div(extent, tiers);
    let mut slice = w.clone();
    match split_dim {
        SplitDim::M => slice.m = share,
        SplitDim::N => slice.n = share,
    }
    latency_2d(per_tier_shape, &slice)
}

pub fn speedup(baseline: &LatencyEstimate, candidate: &LatencyEstimate) -> Result<f64, ModelError> {
    if baseline.total_cycles == 0 || candidate.total_cycles == 0 {
        return Err(ModelError::ZeroCycles);
    }
    Ok(baseline.total_cycles as f64 / candidate.total_cycles as f64)
}

/// Smallest tier count minimizing `ceil(k/l) + l`, the only part of the
/// stacked fold latency that depends on the tier count.
///
/// For any `l > ceil(sqrt k)`, `q = ceil(k/l)` is no larger and scores no
/// worse, so the scan stops at `ceil(sqrt k)`.
pub fn reduction_optimal_tiers(k: u64) -> u64 {
    let k = k.max(1);
    let root = k.isqrt();
    let limit = if root * root == k { root } else { root + 1 };
    let mut best = (u64::MAX, 1);
    for tiers in 1..=limit {
        let cost = ceil_div(k, tiers) + tiers;
        if cost < best.0 {
            best = (cost, tiers);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wl(m: u64, k: u64, n: u64) -> Workload {
        Workload::new("w", m, k, n).unwrap()
    }

    fn shape(r: u64, c: u64, t: u64) -> ArrayShape {
        ArrayShape::new(r, c, t).unwrap()
    }

    #[test]
    fn single_cell() {
        let est = latency_2d(shape(1, 1, 1), &wl(1, 1, 1)).unwrap();
        assert_eq!(est.total_cycles, 2);
        assert_eq!(
            (est.fill_cycles, est.compute_cycles, est.drain_cycles, est.reduce_cycles),
            (0, 1, 1, 0)
        );
    }

    #[test]
    fn rn0_planar_and_stacked() {
        let w = wl(64, 12100, 147);
        let flat = latency_2d(shape(64, 147, 1), &w).unwrap();
        assert_eq!(flat.total_cycles, 12373);
        assert_eq!(flat.folds, 1);
        assert_eq!(latency_3d(shape(64, 147, 1), &w).unwrap(), flat);

        let stacked = latency_3d(shape(64, 147, 12), &w).unwrap();
        assert_eq!(stacked.compute_cycles, 1009);
        assert_eq!(stacked.reduce_cycles, 11);
        assert_eq!(stacked.total_cycles, 1293);
    }

    #[test]
    fn folded_planar() {
        let est = latency_2d(shape(32, 32, 1), &wl(64, 100, 64)).unwrap();
        assert_eq!(est.folds, 4);
        assert_eq!(est.total_cycles, 776);
    }

    #[test]
    fn rejects_mixed_entry_points() {
        assert_eq!(
            latency_2d(shape(4, 4, 2), &wl(4, 4, 4)),
            Err(ModelError::NotPlanar { tiers: 2 })
        );
        assert_eq!(
            latency_3d(shape(2, 2, 4), &wl(2, 2, 2)),
            Err(ModelError::TooManyTiers { tiers: 4, k: 2 })
        );
    }

    #[test]
    fn zero_dims_rejected() {
        assert!(Workload::new("x", 0, 1, 1).is_err());
        assert!(ArrayShape::new(1, 0, 1).is_err());
        assert!(ArrayShape::new(1, 1, 0).is_err());
    }

    #[test]
    fn scaleout() {
        let per_tier = shape(64, 147, 1);
        let w = wl(128, 784, 147);
        let est = latency_scaleout(per_tier, 2, &w, SplitDim::M).unwrap();
        assert_eq!(est.total_cycles, 1057);
        assert_eq!(est.reduce_cycles, 0);
        assert_eq!(
            latency_scaleout(per_tier, 1, &w, SplitDim::N).unwrap(),
            latency_2d(per_tier, &w).unwrap()
        );
        assert!(matches!(
            latency_scaleout(shape(8, 8, 1), 4, &wl(3, 5, 5), SplitDim::M),
            Err(ModelError::SplitTooSmall { extent: 3, tiers: 4, .. })
        ));
    }

    #[test]
    fn speedup_ratios() {
        let mk = |c| LatencyEstimate::from_parts(1, 0, c, 0, 0);
        assert_eq!(speedup(&mk(100), &mk(100)).unwrap(), 1.0);
        assert_eq!(speedup(&mk(1000), &mk(2000)).unwrap(), 0.5);
        let s = speedup(&mk(12373), &mk(1293)).unwrap();
        assert!((s - 9.5692).abs() < 1e-4, "{s}");
        assert_eq!(speedup(&mk(0), &mk(1)), Err(ModelError::ZeroCycles));
    }

    #[test]
    fn reduction_optimum_examples() {
        assert_eq!(reduction_optimal_tiers(1), 1);
        assert_eq!(reduction_optimal_tiers(100), 10);
        assert_eq!(reduction_optimal_tiers(12100), 110);
    }
}
