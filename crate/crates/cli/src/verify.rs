//! Random simulator self-check cases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use stacksim::model::{latency_3d, ArrayShape, Workload};
use stacksim::simulator::{reference_gemm, simulate, Dataflow, Matrix, SimConfig, SimError};

#[derive(Debug, Clone)]
pub struct VerifyCase {
    pub index: usize,
    pub cfg: SimConfig,
    pub a: Matrix,
    pub b: Matrix,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseOutcome {
    pub index: usize,
    pub shape: ArrayShape,
    pub dataflow: Dataflow,
    pub m: u64,
    pub k: u64,
    pub n: u64,
    pub cycles: u64,
    pub model_cycles: u64,
    pub output_match: bool,
}

impl CaseOutcome {
    pub fn cycles_match(&self) -> bool {
        self.cycles == self.model_cycles
    }

    pub fn passed(&self) -> bool {
        self.output_match && self.cycles_match()
    }
}

/// `count` cases alternating planar `os` and stacked `dos` arrays, with
/// dimensions up to `max_dim` and at most `max_macs` MACs in total.
pub fn random_cases(count: usize, max_macs: u64, max_dim: u64, seed: u64) -> Vec<VerifyCase> {
    assert!(max_macs >= 1 && max_dim >= 1, "case bounds must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|index| {
            let m = rng.gen_range(1..=max_dim);
            let k = rng.gen_range(1..=max_dim);
            let n = rng.gen_range(1..=max_dim);
            let dataflow = if index % 2 == 0 { Dataflow::Os } else { Dataflow::Dos };
            let tiers = match dataflow {
                Dataflow::Os => 1,
                Dataflow::Dos => rng.gen_range(1..=k.min(8).min(max_macs)),
            };
            let per_tier = max_macs / tiers;
            let rows = rng.gen_range(1..=max_dim.min(per_tier));
            let cols = rng.gen_range(1..=max_dim.min(per_tier / rows));
            let shape = ArrayShape::new(rows, cols, tiers).expect("positive extents");
            let a = Matrix::random(m as usize, k as usize, 8, &mut rng);
            let b = Matrix::random(k as usize, n as usize, 8, &mut rng);
            VerifyCase {
                index,
                cfg: SimConfig::new(shape, dataflow),
                a,
                b,
            }
        })
        .collect()
}

pub fn run_case(case: &VerifyCase) -> Result<CaseOutcome, SimError> {
    let (m, k, n) = (case.a.rows() as u64, case.a.cols() as u64, case.b.cols() as u64);
    let res = simulate(&case.cfg, &case.a, &case.b)?;
    let w = Workload::new("case", m, k, n).expect("dims are positive");
    let model = latency_3d(case.cfg.shape, &w).expect("simulated shapes are valid");
    let output: Vec<i128> = res.output.as_slice().iter().map(|&v| v as i128).collect();
    Ok(CaseOutcome {
        index: case.index,
        shape: case.cfg.shape,
        dataflow: case.cfg.dataflow,
        m,
        k,
        n,
        cycles: res.cycles,
        model_cycles: model.total_cycles,
        output_match: output == reference_gemm(&case.a, &case.b),
    })
}

/// Runs every case in parallel; results keep case order.
pub fn run_cases(cases: &[VerifyCase]) -> Result<Vec<CaseOutcome>, SimError> {
    cases.par_iter().map(run_case).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cases_respect_bounds() {
        let cases = random_cases(200, 512, 20, 3);
        for c in &cases {
            assert!(c.cfg.shape.mac_count() <= 512);
            assert!(c.a.rows() <= 20 && c.a.cols() <= 20 && c.b.cols() <= 20);
            assert!(c.cfg.shape.tiers() as usize <= c.a.cols());
        }
        assert!(cases.iter().any(|c| c.cfg.shape.tiers() > 1));
    }

    #[test]
    fn small_batch_passes() {
        let outcomes = run_cases(&random_cases(20, 256, 16, 11)).unwrap();
        assert!(outcomes.iter().all(CaseOutcome::passed));
    }

    #[test]
    fn tiny_bounds() {
        let outcomes = run_cases(&random_cases(6, 1, 1, 0)).unwrap();
        assert!(outcomes.iter().all(|o| o.shape.mac_count() == 1 && o.passed()));
    }
}
