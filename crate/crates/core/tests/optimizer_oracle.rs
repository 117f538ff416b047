use proptest::prelude::*;
use stacksim::model::{latency_3d, ArrayShape, Workload};
use stacksim::optimizer::*;

/// Every (rows, cols) with rows * cols <= floor(budget / tiers), no pruning.
fn brute_force(budget: u64, tiers: u64, w: &Workload) -> (u64, u64, u64) {
    let per_tier = budget / tiers;
    let mut best = (u64::MAX, 0, 0);
    for rows in 1..=per_tier {
        for cols in 1..=per_tier / rows {
            let s = ArrayShape::new(rows, cols, tiers).unwrap();
            let c = latency_3d(s, w).unwrap().total_cycles;
            if (c, rows, cols) < best {
                best = (c, rows, cols);
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn optimize_matches_brute_force(budget in 1u64..=1024, tiers in 1u64..=16, m in 1u64..=128, k in 1u64..=128, n in 1u64..=128) {
        let w = Workload::new("p", m, k, n).unwrap();
        let b = Budget::new(budget).unwrap();
        match optimize_shape(&b, tiers, &w) {
            Ok(p) => {
                let (cycles, rows, cols) = brute_force(budget, tiers, &w);
                prop_assert_eq!(p.estimate.total_cycles, cycles);
                prop_assert_eq!((p.shape.rows(), p.shape.cols()), (rows, cols));
                prop_assert!(p.shape.mac_count() <= budget);
            }
            Err(OptimizeError::Infeasible { .. }) => prop_assert!(budget / tiers == 0),
            Err(OptimizeError::Model(_)) => prop_assert!(tiers > k),
            Err(e) => prop_assert!(false, "unexpected {}", e),
        }
    }

    #[test]
    fn more_budget_never_hurts(budget in 1u64..20000, extra in 0u64..20000, tiers in 1u64..=16, m in 1u64..=512, k in 16u64..=4096, n in 1u64..=512) {
        let w = Workload::new("p", m, k, n).unwrap();
        let lo = optimize_shape(&Budget::new(budget).unwrap(), tiers, &w);
        let hi = optimize_shape(&Budget::new(budget + extra).unwrap(), tiers, &w);
        if let (Ok(lo), Ok(hi)) = (lo, hi) {
            prop_assert!(hi.estimate.total_cycles <= lo.estimate.total_cycles);
        }
    }

    #[test]
    fn saturates_once_full_workload_fits(tiers in 1u64..=16, m in 1u64..=256, k in 16u64..=4096, n in 1u64..=256, extra in 0u64..100000) {
        let w = Workload::new("p", m, k, n).unwrap();
        let fit = m * n * tiers;
        let a = optimize_shape(&Budget::new(fit).unwrap(), tiers, &w).unwrap();
        let b = optimize_shape(&Budget::new(fit + extra).unwrap(), tiers, &w).unwrap();
        prop_assert_eq!(a.estimate, b.estimate);
        prop_assert_eq!(a.shape, ArrayShape::new(m, n, tiers).unwrap());
    }
}

#[test]
fn threshold_on_power_of_two_grid() {
    let mut points = 0;
    for m in [16u64, 32, 64, 128, 256] {
        for n in [16u64, 64, 256, 1024] {
            if m * n > 1 << 16 {
                continue;
            }
            for k in [255u64, 1024, 12100, 16384] {
                let w = Workload::new("g", m, k, n).unwrap();
                for e in 6..=19 {
                    let sweep = sweep_tiers(&Budget::new(1 << e).unwrap(), &w, &(2..=16).collect::<Vec<_>>()).unwrap();
                    for (t, entry) in &sweep.entries {
                        if let Some(p) = entry.point() {
                            points += 1;
                            if p.speedup_vs_2d > 1.0 {
                                assert!(1u64 << e > m * n, "m={m} n={n} k={k} budget=2^{e} tiers={t}");
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(points > 1000);
}

#[test]
fn k255_small_budget_loses() {
    let w = Workload::new("RN0-k255", 64, 255, 147).unwrap();
    let sweep = sweep_tiers(&Budget::new(1 << 12).unwrap(), &w, &[2]).unwrap();
    assert!(sweep.entries[0].1.point().unwrap().speedup_vs_2d < 1.0);
}

#[test]
fn rn0_twelve_tiers() {
    let w = Workload::new("RN0", 64, 12100, 147).unwrap();
    let sweep = sweep_tiers(&Budget::new(1 << 18).unwrap(), &w, &(1..=12).collect::<Vec<_>>()).unwrap();
    assert_eq!(sweep.entries[0].1.point().unwrap().speedup_vs_2d, 1.0);
    let (tiers, best) = sweep.best().unwrap();
    assert_eq!(tiers, 12);
    assert!((8.0..=10.0).contains(&best.speedup_vs_2d));
}

#[test]
fn budget_sweep_reports_threshold() {
    let w = Workload::new("f4", 64, 8192, 512).unwrap();
    let budgets: Vec<u64> = (8..=19).map(|e| 1 << e).collect();
    let s = sweep_budget(4, &w, &budgets).unwrap();
    assert_eq!(s.analytic_threshold, 32768);
    assert!(s.first_speedup_budget.unwrap() > s.analytic_threshold);
    for e in &s.entries {
        if e.macs <= s.analytic_threshold {
            assert!(e.entry.point().unwrap().speedup_vs_2d <= 1.0);
        }
    }
    // m * n * tiers MACs with long K: the stack wins.
    let big = sweep_budget(4, &w, &[64 * 512 * 4]).unwrap();
    assert!(big.entries[0].entry.point().unwrap().speedup_vs_2d > 1.0);
}

#[test]
fn tier_study_is_deterministic_and_parallel_safe() {
    let a = optimal_tier_study(25, &[1 << 12, 1 << 15], 3).unwrap();
    let b = optimal_tier_study(25, &[1 << 12, 1 << 15], 3).unwrap();
    assert_eq!(a, b);
    let serial: Vec<u64> = a
        .workloads
        .entries()
        .iter()
        .map(|w| optimal_tiers(&Budget::new(1 << 15).unwrap(), w).unwrap().shape.tiers())
        .collect();
    assert_eq!(a.per_budget[1].optimal_tiers, serial);

    let one = optimal_tier_study(1, &[1 << 15], 99).unwrap();
    assert_eq!(one, optimal_tier_study(1, &[1 << 15], 99).unwrap());
    assert_eq!(one.per_budget[0].optimal_tiers.len(), 1);
}
