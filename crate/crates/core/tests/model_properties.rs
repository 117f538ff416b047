use proptest::prelude::*;
use stacksim::model::*;

/// Folds counted by walking the output tile by tile.
fn count_tiles(m: u64, n: u64, rows: u64, cols: u64) -> u64 {
    let mut folds = 0;
    let mut r = 0;
    while r < m {
        let mut c = 0;
        while c < n {
            folds += 1;
            c += cols;
        }
        r += rows;
    }
    folds
}

fn reduction_cost(k: u64, l: u64) -> u64 {
    k.div_ceil(l) + l
}

#[test]
fn reduction_optimum_matches_exhaustive_scan() {
    for k in 1..=10_000u64 {
        let mut best = (u64::MAX, 0);
        for l in 1..=k {
            let c = reduction_cost(k, l);
            if c < best.0 {
                best = (c, l);
            }
        }
        assert_eq!(reduction_optimal_tiers(k), best.1, "k={k}");
    }
}

fn workload() -> impl Strategy<Value = Workload> {
    (1u64..5000, 1u64..20000, 1u64..5000).prop_map(|(m, k, n)| Workload::new("p", m, k, n).unwrap())
}

proptest! {
    #[test]
    fn single_tier_stack_is_planar(r in 1u64..512, c in 1u64..512, w in workload()) {
        let s = ArrayShape::new(r, c, 1).unwrap();
        prop_assert_eq!(latency_3d(s, &w).unwrap(), latency_2d(s, &w).unwrap());
    }

    #[test]
    fn fold_count_law(r in 1u64..300, c in 1u64..300, t in 1u64..17, m in 1u64..2000, n in 1u64..2000, k in 16u64..4000) {
        let w = Workload::new("p", m, k, n).unwrap();
        let est = latency_3d(ArrayShape::new(r, c, t).unwrap(), &w).unwrap();
        prop_assert_eq!(est.folds, count_tiles(m, n, r, c));
        prop_assert_eq!(est.total_cycles, est.fold_cycles * est.folds);
        prop_assert_eq!(
            est.fold_cycles,
            est.fill_cycles + est.compute_cycles + est.reduce_cycles + est.drain_cycles
        );
    }

    #[test]
    fn latency_non_decreasing_in_k(r in 1u64..200, c in 1u64..200, t in 1u64..17, m in 1u64..1000, n in 1u64..1000, k in 16u64..10000, dk in 0u64..500) {
        let s = ArrayShape::new(r, c, t).unwrap();
        let lo = latency_3d(s, &Workload::new("a", m, k, n).unwrap()).unwrap();
        let hi = latency_3d(s, &Workload::new("b", m, k + dk, n).unwrap()).unwrap();
        prop_assert!(lo.total_cycles <= hi.total_cycles);
    }

    #[test]
    fn scaleout_never_reduces(r in 1u64..200, c in 1u64..200, tiers in 1u64..17, w in workload(), split_m in any::<bool>()) {
        let dim = if split_m { SplitDim::M } else { SplitDim::N };
        let s = ArrayShape::planar(r, c).unwrap();
        match latency_scaleout(s, tiers, &w, dim) {
            Ok(est) => prop_assert_eq!(est.reduce_cycles, 0),
            Err(ModelError::SplitTooSmall { extent, .. }) => prop_assert!(extent < tiers),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn reduction_optimum_is_near_sqrt(k in 1u64..10_000_000) {
        let l = reduction_optimal_tiers(k);
        let root = (k as f64).sqrt();
        prop_assert!((l as f64 - root).abs() <= root.sqrt() + 2.0, "k={} l={}", k, l);
    }
}
