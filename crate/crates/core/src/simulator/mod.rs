//! Cycle-stepped functional simulation of the output-stationary (planar)
//! and distributed output-stationary (stacked) dataflows.
//!
//! Every MAC cell is modelled explicitly. Operands hop one cell per `skew`
//! cycles, rows and columns are injected with the matching stagger, and
//! tier `t` starts `t * skew` cycles after the top tier. Each tier
//! accumulates its own slice of `K` in place; a finished partial sum drops
//! to the tier below and is folded into that tier's final accumulate. The
//! bottom tier then drains one row per cycle.
//!
//! With `skew = 1` a single fold takes exactly
//! `2R + C + ceil(K/l) + l - 3` cycles, which is what
//! [`crate::model::latency_3d`] predicts.

mod cell;
mod matrix;
mod schedule;
mod trace;

pub use cell::{CellMode, MacCell};
pub use matrix::{reference_gemm, Matrix};
pub use schedule::{split_k, trace_skew_schedule, InjectionSchedule};
pub use trace::{NullSink, TextTrace, TraceEvent, TraceRecord, TraceSink};

use std::fmt;

use thiserror::Error;

use crate::model::{ArrayShape, Workload};
use cell::{Step, Token};
use matrix::signed_range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dataflow {
    /// Output stationary on a single tier.
    Os,
    /// Distributed output stationary: `K` split across tiers, partial sums
    /// reduced down each pile.
    Dos,
}

impl fmt::Display for Dataflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dataflow::Os => f.write_str("os"),
            Dataflow::Dos => f.write_str("dos"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("dimension mismatch: A is {a_rows}x{a_cols}, B is {b_rows}x{b_cols}")]
    DimensionMismatch {
        a_rows: usize,
        a_cols: usize,
        b_rows: usize,
        b_cols: usize,
    },
    #[error("empty operand matrix")]
    EmptyOperand,
    #[error("invalid simulator config: {0}")]
    InvalidConfig(String),
    #[error("{tiers} tiers exceed K={k}")]
    TooManyTiers { tiers: u64, k: u64 },
    #[error("operand {matrix}[{row}][{col}] = {value} does not fit in {bits} bits")]
    OperandOutOfRange {
        matrix: char,
        row: usize,
        col: usize,
        value: i64,
        bits: u32,
    },
    #[error(
        "accumulator overflow ({bits} bits) in fold {fold} at tier {tier}, cell ({row}, {col}), cycle {cycle}"
    )]
    AccumulatorOverflow {
        fold: u64,
        tier: usize,
        row: usize,
        col: usize,
        cycle: u64,
        bits: u32,
    },
    #[error("simulation result has zero cycles")]
    ZeroCycles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub shape: ArrayShape,
    pub dataflow: Dataflow,
    /// Stagger between neighbouring rows, columns and tiers, and the
    /// operand hop latency between neighbouring cells.
    pub skew: u64,
    pub operand_bits: u32,
    pub acc_bits: u32,
}

impl SimConfig {
    pub fn new(shape: ArrayShape, dataflow: Dataflow) -> Self {
        Self {
            shape,
            dataflow,
            skew: 1,
            operand_bits: 8,
            acc_bits: 32,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.dataflow == Dataflow::Os && self.shape.tiers() != 1 {
            return Err(SimError::InvalidConfig(format!(
                "output-stationary dataflow needs one tier, shape has {}",
                self.shape.tiers()
            )));
        }
        if !(1..=32).contains(&self.operand_bits) {
            return Err(SimError::InvalidConfig(format!(
                "operand width {} outside 1..=32",
                self.operand_bits
            )));
        }
        if !(1..=64).contains(&self.acc_bits) {
            return Err(SimError::InvalidConfig(format!(
                "accumulator width {} outside 1..=64",
                self.acc_bits
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimResult {
    /// First operand in to last output out, over all folds.
    pub cycles: u64,
    pub output: Matrix,
    /// Valid multiply-accumulates per tier, top tier first.
    pub mac_active_cycles: Vec<u64>,
    pub folds_executed: u64,
}

pub fn simulate(cfg: &SimConfig, a: &Matrix, b: &Matrix) -> Result<SimResult, SimError> {
    simulate_traced(cfg, a, b, &mut NullSink)
}

pub fn simulate_traced(
    cfg: &SimConfig,
    a: &Matrix,
    b: &Matrix,
    sink: &mut dyn TraceSink,
) -> Result<SimResult, SimError> {
    cfg.validate()?;
    if a.cols() != b.rows() {
        return Err(SimError::DimensionMismatch {
            a_rows: a.rows(),
            a_cols: a.cols(),
            b_rows: b.rows(),
            b_cols: b.cols(),
        });
    }
    if a.rows() == 0 || a.cols() == 0 || b.cols() == 0 {
        return Err(SimError::EmptyOperand);
    }
    let k = a.cols() as u64;
    if cfg.shape.tiers() > k {
        return Err(SimError::TooManyTiers {
            tiers: cfg.shape.tiers(),
            k,
        });
    }
    check_operands('A', a, cfg.operand_bits)?;
    check_operands('B', b, cfg.operand_bits)?;

    let w = Workload::new("sim", a.rows() as u64, k, b.cols() as u64)
        .expect("dimensions checked above");
    let schedule = trace_skew_schedule(cfg, &w);
    let mut engine = Engine::new(cfg, a, b, schedule, sink);
    engine.run()?;
    Ok(engine.into_result())
}

/// Fraction of MAC-cycles that did useful work.
pub fn utilization(result: &SimResult, shape: ArrayShape) -> Result<f64, SimError> {
    if result.cycles == 0 {
        return Err(SimError::ZeroCycles);
    }
    let active: u64 = result.mac_active_cycles.iter().sum();
    Ok(active as f64 / (shape.mac_count() as f64 * result.cycles as f64))
}

fn check_operands(name: char, m: &Matrix, bits: u32) -> Result<(), SimError> {
    let (lo, hi) = signed_range(bits);
    match m.iter_indexed().find(|&(_, _, v)| v < lo || v > hi) {
        Some((row, col, value)) => Err(SimError::OperandOutOfRange {
            matrix: name,
            row,
            col,
            value,
            bits,
        }),
        None => Ok(()),
    }
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    a: &'a Matrix,
    b: &'a Matrix,
    schedule: InjectionSchedule,
    sink: &'a mut dyn TraceSink,
    rows: usize,
    cols: usize,
    tiers: usize,
    // Indexed [tier][row][col], flattened.
    cells: Vec<MacCell>,
    a_in: Vec<Option<Token>>,
    b_in: Vec<Option<Token>>,
    acc_range: (i64, i64),
    cycle_base: u64,
    fold: u64,
    output: Matrix,
    active: Vec<u64>,
}

impl<'a> Engine<'a> {
    fn new(
        cfg: &'a SimConfig,
        a: &'a Matrix,
        b: &'a Matrix,
        schedule: InjectionSchedule,
        sink: &'a mut dyn TraceSink,
    ) -> Self {
        let rows = cfg.shape.rows() as usize;
        let cols = cfg.shape.cols() as usize;
        let tiers = cfg.shape.tiers() as usize;
        let hop = cfg.skew as usize;
        Self {
            cfg,
            a,
            b,
            schedule,
            sink,
            rows,
            cols,
            tiers,
            cells: vec![MacCell::new(hop); rows * cols * tiers],
            a_in: vec![None; rows * cols],
            b_in: vec![None; rows * cols],
            acc_range: signed_range(cfg.acc_bits),
            cycle_base: 0,
            fold: 0,
            output: Matrix::zeros(a.rows(), b.cols()),
            active: vec![0; tiers],
        }
    }

    fn idx(&self, tier: usize, row: usize, col: usize) -> usize {
        (tier * self.rows + row) * self.cols + col
    }

    fn run(&mut self) -> Result<(), SimError> {
        let (m, n) = (self.a.rows(), self.b.cols());
        for row0 in (0..m).step_by(self.rows) {
            for col0 in (0..n).step_by(self.cols) {
                let cycles = self.run_fold(row0, col0)?;
                self.cycle_base += cycles;
                self.fold += 1;
            }
        }
        Ok(())
    }

    /// A-operand entering row `row` of tier `tier` at fold-local `cycle`.
    fn edge_a(&self, tier: usize, row: usize, row0: usize, cycle: u64) -> Option<Token> {
        let start = self.schedule.tier_offsets[tier] + self.schedule.row_offsets[row];
        let slice = &self.schedule.tier_slices[tier];
        let kk = cycle.checked_sub(start)?;
        let len = slice.end - slice.start;
        if kk >= len {
            return None;
        }
        let r = row0 + row;
        let valid = r < self.a.rows();
        Some(Token {
            value: if valid {
                self.a.get(r, (slice.start + kk) as usize)
            } else {
                0
            },
            valid,
            last: kk + 1 == len,
        })
    }

    fn edge_b(&self, tier: usize, col: usize, col0: usize, cycle: u64) -> Option<Token> {
        let start = self.schedule.tier_offsets[tier] + self.schedule.col_offsets[col];
        let slice = &self.schedule.tier_slices[tier];
        let kk = cycle.checked_sub(start)?;
        let len = slice.end - slice.start;
        if kk >= len {
            return None;
        }
        let c = col0 + col;
        let valid = c < self.b.cols();
        Some(Token {
            value: if valid {
                self.b.get((slice.start + kk) as usize, c)
            } else {
                0
            },
            valid,
            last: kk + 1 == len,
        })
    }

    fn emit(&mut self, cycle: u64, tier: usize, row: usize, col: usize, origin: (usize, usize), event: TraceEvent) {
        if self.sink.enabled() {
            self.sink.record(&TraceRecord {
                cycle: self.cycle_base + cycle,
                fold: self.fold,
                tier,
                row,
                col,
                out_row: origin.0 + row,
                out_col: origin.1 + col,
                event,
            });
        }
    }

    /// Runs one fold on a clean array; returns its length in cycles.
    fn run_fold(&mut self, row0: usize, col0: usize) -> Result<u64, SimError> {
        for cell in &mut self.cells {
            cell.reset();
        }
        let (rows, cols, tiers) = (self.rows, self.cols, self.tiers);
        let hop = self.cfg.skew as usize;
        let bottom = tiers - 1;
        let mut bottom_finished = 0usize;
        let mut cycle = 0u64;

        // Generous bound; reaching it means the schedule deadlocked.
        let horizon = (self.cfg.skew.max(1) + 1) * (rows + cols + tiers) as u64
            + self.schedule.tier_slices.iter().map(|s| s.end - s.start).max().unwrap_or(0)
            + 4;

        loop {
            assert!(cycle <= horizon, "fold did not complete within {horizon} cycles");
            let slot = if hop > 0 { cycle as usize % hop } else { 0 };
            // Bottom tier first: a partial sum sent down this cycle is only
            // visible to the receiving cell on the next clock.
            for tier in (0..tiers).rev() {
                for row in 0..rows {
                    for col in 0..cols {
                        let i = row * cols + col;
                        self.a_in[i] = if col == 0 || hop == 0 {
                            self.edge_a(tier, row, row0, cycle)
                        } else {
                            self.cells[self.idx(tier, row, col - 1)].a_out(slot)
                        };
                        self.b_in[i] = if row == 0 || hop == 0 {
                            self.edge_b(tier, col, col0, cycle)
                        } else {
                            self.cells[self.idx(tier, row - 1, col)].b_out(slot)
                        };
                    }
                }
                for row in 0..rows {
                    for col in 0..cols {
                        let i = row * cols + col;
                        let ci = self.idx(tier, row, col);
                        let (a_tok, b_tok) = (self.a_in[i], self.b_in[i]);
                        if hop > 0 {
                            self.cells[ci].latch(slot, a_tok, b_tok);
                        }
                        let was_finished = self.cells[ci].is_finished();
                        let step = self.cells[ci].step(a_tok, b_tok, tier > 0);
                        let acc = self.cells[ci].acc;
                        if step.is_err() || acc < self.acc_range.0 || acc > self.acc_range.1 {
                            return Err(SimError::AccumulatorOverflow {
                                fold: self.fold,
                                tier,
                                row,
                                col,
                                cycle: self.cycle_base + cycle,
                                bits: self.cfg.acc_bits,
                            });
                        }
                        let origin = (row0, col0);
                        match step.unwrap() {
                            Step::Idle => {}
                            Step::Mac {
                                product,
                                local_done,
                                merged,
                            } => {
                                if let Some(product) = product {
                                    self.active[tier] += 1;
                                    self.emit(cycle, tier, row, col, origin, TraceEvent::Mac { product });
                                }
                                if let Some(partial) = local_done {
                                    self.emit(cycle, tier, row, col, origin, TraceEvent::LocalDone { partial });
                                }
                                if let Some(incoming) = merged {
                                    self.emit(cycle, tier, row, col, origin, TraceEvent::Merge { incoming });
                                }
                            }
                            Step::Reduce { incoming } => {
                                self.emit(cycle, tier, row, col, origin, TraceEvent::Reduce { incoming });
                            }
                        }
                        if !was_finished && self.cells[ci].is_finished() {
                            if tier == bottom {
                                bottom_finished += 1;
                            } else {
                                let below = self.idx(tier + 1, row, col);
                                debug_assert!(self.cells[below].vert_in.is_none());
                                self.cells[below].vert_in = Some(acc);
                                self.emit(cycle, tier, row, col, origin, TraceEvent::SendDown { value: acc });
                            }
                        }
                    }
                }
            }
            if bottom_finished == rows * cols {
                break;
            }
            cycle += 1;
        }

        // Drain: the bottom tier shifts its rows out, last row first.
        for step in 0..rows {
            let row = rows - 1 - step;
            let drain_cycle = cycle + 1 + step as u64;
            for col in 0..cols {
                let (r, c) = (row0 + row, col0 + col);
                if r < self.output.rows() && c < self.output.cols() {
                    let value = self.cells[self.idx(bottom, row, col)].acc;
                    self.output.set(r, c, value);
                    self.emit(drain_cycle, bottom, row, col, (row0, col0), TraceEvent::Drain { value });
                }
            }
        }
        Ok(cycle + 1 + rows as u64)
    }

    fn into_result(self) -> SimResult {
        SimResult {
            cycles: self.cycle_base,
            output: self.output,
            mac_active_cycles: self.active,
            folds_executed: self.fold,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::latency_3d;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shape(r: u64, c: u64, t: u64) -> ArrayShape {
        ArrayShape::new(r, c, t).unwrap()
    }

    fn as_i128(m: &Matrix) -> Vec<i128> {
        m.as_slice().iter().map(|&v| v as i128).collect()
    }

    #[test]
    fn single_cell_trace() {
        let cfg = SimConfig::new(shape(1, 1, 1), Dataflow::Os);
        let a = Matrix::from_rows(vec![vec![3]]);
        let b = Matrix::from_rows(vec![vec![5]]);
        let mut trace = Vec::new();
        let res = simulate_traced(&cfg, &a, &b, &mut trace).unwrap();
        assert_eq!(res.output, Matrix::from_rows(vec![vec![15]]));
        assert_eq!(res.cycles, 2);
        assert_eq!(res.folds_executed, 1);
        assert_eq!(utilization(&res, cfg.shape).unwrap(), 0.5);
        let events: Vec<_> = trace.iter().map(|r| (r.cycle, r.event)).collect();
        assert_eq!(
            events,
            vec![
                (0, TraceEvent::Mac { product: 15 }),
                (0, TraceEvent::LocalDone { partial: 15 }),
                (1, TraceEvent::Drain { value: 15 }),
            ]
        );
    }

    #[test]
    fn two_tier_identity_padded() {
        let cfg = SimConfig::new(shape(2, 2, 2), Dataflow::Dos);
        let a = Matrix::from_rows(vec![vec![1, 0, 0, 0], vec![0, 1, 0, 0]]);
        let b = Matrix::from_rows(vec![vec![1, 2], vec![3, 4], vec![5, 6], vec![7, 8]]);
        let res = simulate(&cfg, &a, &b).unwrap();
        assert_eq!(as_i128(&res.output), reference_gemm(&a, &b));
        let w = Workload::new("w", 2, 4, 2).unwrap();
        assert_eq!(res.cycles, latency_3d(cfg.shape, &w).unwrap().total_cycles);
    }

    #[test]
    fn folded_planar_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = Matrix::random(8, 6, 8, &mut rng);
        let b = Matrix::random(6, 8, 8, &mut rng);
        let cfg = SimConfig::new(shape(4, 4, 1), Dataflow::Os);
        let res = simulate(&cfg, &a, &b).unwrap();
        assert_eq!(res.folds_executed, 4);
        assert_eq!(as_i128(&res.output), reference_gemm(&a, &b));
        let w = Workload::new("w", 8, 6, 8).unwrap();
        assert_eq!(res.cycles, latency_3d(cfg.shape, &w).unwrap().total_cycles);
    }

    #[test]
    fn uneven_k_split_and_partial_folds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Matrix::random(5, 11, 8, &mut rng);
        let b = Matrix::random(11, 7, 8, &mut rng);
        for tiers in 1..=11 {
            let cfg = SimConfig::new(shape(3, 2, tiers), Dataflow::Dos);
            let res = simulate(&cfg, &a, &b).unwrap();
            assert_eq!(as_i128(&res.output), reference_gemm(&a, &b), "tiers={tiers}");
            let w = Workload::new("w", 5, 11, 7).unwrap();
            assert_eq!(res.cycles, latency_3d(cfg.shape, &w).unwrap().total_cycles, "tiers={tiers}");
            assert_eq!(res.mac_active_cycles.iter().sum::<u64>(), 5 * 11 * 7);
        }
    }

    #[test]
    fn lockstep_tiers_reduce_with_pure_adds() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = Matrix::random(3, 12, 8, &mut rng);
        let b = Matrix::random(12, 3, 8, &mut rng);
        let mut cfg = SimConfig::new(shape(3, 3, 4), Dataflow::Dos);
        cfg.skew = 0;
        let mut trace = Vec::new();
        let res = simulate_traced(&cfg, &a, &b, &mut trace).unwrap();
        assert_eq!(as_i128(&res.output), reference_gemm(&a, &b));
        let reduces = trace
            .iter()
            .filter(|r| matches!(r.event, TraceEvent::Reduce { .. }))
            .count();
        assert_eq!(reduces, 3 * 3 * 3);
        // No fill stagger: ceil(12/4) compute, 3 hops, 3 drain.
        assert_eq!(res.cycles, 3 + 3 + 3);
    }

    #[test]
    fn wider_skew_stays_aligned() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Matrix::random(4, 9, 8, &mut rng);
        let b = Matrix::random(9, 5, 8, &mut rng);
        let mut cfg = SimConfig::new(shape(4, 5, 3), Dataflow::Dos);
        cfg.skew = 3;
        let res = simulate(&cfg, &a, &b).unwrap();
        assert_eq!(as_i128(&res.output), reference_gemm(&a, &b));
    }

    #[test]
    fn tier_sums_match_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = Matrix::random(6, 10, 8, &mut rng);
        let b = Matrix::random(10, 5, 8, &mut rng);
        let cfg = SimConfig::new(shape(4, 4, 3), Dataflow::Dos);
        let mut trace = Vec::new();
        let res = simulate_traced(&cfg, &a, &b, &mut trace).unwrap();
        let mut sums = vec![0i64; 6 * 5];
        for rec in &trace {
            if let TraceEvent::LocalDone { partial } = rec.event {
                if rec.out_row < 6 && rec.out_col < 5 {
                    sums[rec.out_row * 5 + rec.out_col] += partial;
                }
            }
        }
        assert_eq!(sums, res.output.as_slice());
    }

    #[test]
    fn errors() {
        let a = Matrix::from_rows(vec![vec![1, 2]]);
        let b = Matrix::from_rows(vec![vec![1], vec![2], vec![3]]);
        let cfg = SimConfig::new(shape(1, 1, 1), Dataflow::Os);
        assert!(matches!(simulate(&cfg, &a, &b), Err(SimError::DimensionMismatch { .. })));

        let b = Matrix::from_rows(vec![vec![1], vec![2]]);
        let cfg3 = SimConfig::new(shape(1, 1, 3), Dataflow::Dos);
        assert_eq!(simulate(&cfg3, &a, &b), Err(SimError::TooManyTiers { tiers: 3, k: 2 }));

        let os3 = SimConfig::new(shape(1, 1, 2), Dataflow::Os);
        assert!(matches!(simulate(&os3, &a, &b), Err(SimError::InvalidConfig(_))));

        let big = Matrix::from_rows(vec![vec![300, 1]]);
        assert!(matches!(
            simulate(&cfg, &big, &b),
            Err(SimError::OperandOutOfRange { matrix: 'A', row: 0, col: 0, .. })
        ));
    }

    #[test]
    fn overflow_reports_location() {
        let a = Matrix::from_rows(vec![vec![127, 127, 127, 127]]);
        let b = Matrix::from_rows(vec![vec![127], vec![127], vec![127], vec![127]]);
        let mut cfg = SimConfig::new(shape(1, 1, 1), Dataflow::Os);
        cfg.acc_bits = 16;
        let err = simulate(&cfg, &a, &b).unwrap_err();
        assert_eq!(
            err,
            SimError::AccumulatorOverflow {
                fold: 0,
                tier: 0,
                row: 0,
                col: 0,
                cycle: 2,
                bits: 16
            }
        );
    }

    #[test]
    fn utilization_of_idle_result_is_zero() {
        let res = SimResult {
            cycles: 10,
            output: Matrix::zeros(1, 1),
            mac_active_cycles: vec![0],
            folds_executed: 1,
        };
        assert_eq!(utilization(&res, shape(2, 2, 1)).unwrap(), 0.0);
        let empty = SimResult { cycles: 0, ..res };
        assert_eq!(utilization(&empty, shape(2, 2, 1)), Err(SimError::ZeroCycles));
    }
}
