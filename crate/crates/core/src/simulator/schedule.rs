use std::ops::Range;

use super::SimConfig;
use crate::model::Workload;

/// Per-fold operand injection offsets, in cycles from the start of a fold.
///
/// Row `i` of `A` enters at `i * skew`, column `j` of `B` at `j * skew`,
/// and every stream on tier `t` is delayed by a further `t * skew`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectionSchedule {
    pub row_offsets: Vec<u64>,
    pub col_offsets: Vec<u64>,
    pub tier_offsets: Vec<u64>,
    /// Slice of the `K` dimension handled by each tier, top tier first.
    pub tier_slices: Vec<Range<u64>>,
}

impl InjectionSchedule {
    /// Cycle at which element `kk` of tier `tier`'s slice meets at cell
    /// `(row, col)`, relative to the fold start.
    pub fn meet_cycle(&self, tier: usize, row: usize, col: usize, kk: u64) -> u64 {
        self.tier_offsets[tier] + self.row_offsets[row] + self.col_offsets[col] + kk
    }
}

pub fn trace_skew_schedule(cfg: &SimConfig, w: &Workload) -> InjectionSchedule {
    let shape = cfg.shape;
    let skew = cfg.skew;
    InjectionSchedule {
        row_offsets: (0..shape.rows()).map(|i| i * skew).collect(),
        col_offsets: (0..shape.cols()).map(|j| j * skew).collect(),
        tier_offsets: (0..shape.tiers()).map(|t| t * skew).collect(),
        tier_slices: split_k(w.k(), shape.tiers()),
    }
}

/// Splits `0..k` into `tiers` contiguous slices whose lengths differ by at
/// most one. Shorter slices go to the upper tiers: a tier must not finish
/// before the tier above it has handed down its partial sum.
pub fn split_k(k: u64, tiers: u64) -> Vec<Range<u64>> {
    let base = k / tiers;
    let long = k % tiers;
    let mut start = 0;
    (0..tiers)
        .map(|t| {
            let len = if t >= tiers - long { base + 1 } else { base };
            let slice = start..start + len;
            start += len;
            slice
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ArrayShape;
    use crate::simulator::Dataflow;

    fn cfg(r: u64, c: u64, t: u64) -> SimConfig {
        let flow = if t == 1 { Dataflow::Os } else { Dataflow::Dos };
        SimConfig::new(ArrayShape::new(r, c, t).unwrap(), flow)
    }

    #[test]
    fn single_cell_has_no_offsets() {
        let w = Workload::new("w", 1, 1, 1).unwrap();
        let s = trace_skew_schedule(&cfg(1, 1, 1), &w);
        assert_eq!(s.row_offsets, vec![0]);
        assert_eq!(s.col_offsets, vec![0]);
        assert_eq!(s.tier_offsets, vec![0]);
    }

    #[test]
    fn rows_skew_by_one() {
        let w = Workload::new("w", 3, 4, 1).unwrap();
        let s = trace_skew_schedule(&cfg(3, 1, 1), &w);
        assert_eq!(s.row_offsets, vec![0, 1, 2]);
    }

    #[test]
    fn second_tier_starts_one_cycle_later() {
        let w = Workload::new("w", 2, 4, 2).unwrap();
        let s = trace_skew_schedule(&cfg(2, 2, 2), &w);
        assert_eq!(s.tier_offsets, vec![0, 1]);
        assert_eq!(s.meet_cycle(1, 0, 0, 0), s.meet_cycle(0, 0, 0, 0) + 1);
    }

    #[test]
    fn slices_cover_k_and_grow_downward() {
        for k in 1..40u64 {
            for tiers in 1..=k.min(9) {
                let slices = split_k(k, tiers);
                assert_eq!(slices.len() as u64, tiers);
                assert_eq!(slices[0].start, 0);
                assert_eq!(slices.last().unwrap().end, k);
                for pair in slices.windows(2) {
                    assert_eq!(pair[0].end, pair[1].start);
                    let (a, b) = (pair[0].end - pair[0].start, pair[1].end - pair[1].start);
                    assert!(a <= b && b - a <= 1);
                }
                let longest = slices.iter().map(|s| s.end - s.start).max().unwrap();
                assert_eq!(longest, k.div_ceil(tiers));
            }
        }
    }
}
