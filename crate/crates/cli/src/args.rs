//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stacksim::costmodel::LinkKind;
use stacksim::model::{ArrayShape, Workload};
use stacksim::simulator::Dataflow;

use crate::columns;

#[derive(Debug, Parser)]
#[command(name = "stacksim", version, about = "Design-space exploration for 3D-stacked systolic arrays")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytical latency of a fixed array shape.
    #[command(after_help = columns::help(columns::LATENCY))]
    Latency {
        #[command(flatten)]
        source: WorkloadSource,
        /// Array shape as ROWSxCOLSxTIERS (or ROWSxCOLS for one tier).
        #[arg(long, value_parser = parse_shape)]
        shape: ArrayShape,
        #[command(flatten)]
        output: Output,
    },
    /// Cycle-level simulation on random operands, checked against a
    /// reference GEMM and the analytical model.
    #[command(after_help = columns::help(columns::SIMULATE))]
    Simulate {
        #[command(flatten)]
        source: WorkloadSource,
        #[arg(long, value_parser = parse_shape)]
        shape: ArrayShape,
        /// Defaults to `os` for one tier and `dos` otherwise.
        #[arg(long, value_enum)]
        dataflow: Option<DataflowArg>,
        #[arg(long, default_value_t = 1)]
        skew: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Signed operand width in bits.
        #[arg(long, default_value_t = 8)]
        operand_bits: u32,
        /// Signed accumulator width in bits.
        #[arg(long, default_value_t = 32)]
        acc_bits: u32,
        /// Write a per-cycle event trace (one workload only).
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Latency-optimal array shape for a MAC budget.
    #[command(after_help = columns::help(columns::OPTIMIZE))]
    Optimize {
        #[command(flatten)]
        source: WorkloadSource,
        /// MAC budget, e.g. 262144 or 2^18.
        #[arg(long, value_parser = parse_count)]
        macs: u64,
        /// Fixed tier count; omitted, the best count up to --max-tiers is chosen.
        #[arg(long)]
        tiers: Option<u64>,
        #[arg(long, default_value_t = 16)]
        max_tiers: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Optimized speedup over the planar array for each tier count.
    #[command(after_help = columns::help(columns::SWEEP_TIERS))]
    SweepTiers {
        #[command(flatten)]
        source: WorkloadSource,
        #[arg(long, value_parser = parse_count)]
        macs: u64,
        /// Tier counts: `A..B` (inclusive), a comma list, or one value.
        #[arg(long, default_value = "1..16", value_parser = parse_tiers)]
        tiers: TierList,
        #[command(flatten)]
        output: Output,
    },
    /// Optimized speedup over the planar array for each MAC budget.
    #[command(after_help = columns::help(columns::SWEEP_MACS))]
    SweepMacs {
        #[command(flatten)]
        source: WorkloadSource,
        #[arg(long)]
        tiers: u64,
        /// Budgets: comma list whose items are counts or doubling ranges
        /// `A..B`, e.g. `2^8..2^19`.
        #[arg(long, default_value = "2^8..2^19", value_parser = parse_budgets)]
        macs: BudgetList,
        #[command(flatten)]
        output: Output,
    },
    /// Distribution of the optimal tier count over random workloads.
    #[command(after_help = columns::help(columns::TIER_STUDY))]
    TierStudy {
        /// Random workloads to draw.
        #[arg(long, default_value_t = 300, conflicts_with = "csv")]
        count: usize,
        /// Use the workloads in this CSV instead of random ones.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "2^12,2^15,2^18", value_parser = parse_budgets)]
        macs: BudgetList,
        #[arg(long, default_value_t = 16)]
        max_tiers: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Performance per silicon area relative to the planar array.
    #[command(after_help = columns::help(columns::PERF_AREA))]
    PerfArea {
        #[command(flatten)]
        source: WorkloadSource,
        #[arg(long, value_parser = parse_count)]
        macs: u64,
        #[arg(long, default_value = "1..16", value_parser = parse_tiers)]
        tiers: TierList,
        /// Vertical links to evaluate, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "tsv,miv")]
        link: Vec<LinkKind>,
        /// Technology parameters (`key = value` lines); placeholders otherwise.
        #[arg(long, value_name = "PATH")]
        tech: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Simulator self-check on random small cases.
    #[command(after_help = columns::help(columns::VERIFY))]
    Verify {
        /// Largest array (all tiers) to draw.
        #[arg(long, default_value_t = 4096)]
        max_macs: u64,
        /// Largest M, K and N to draw.
        #[arg(long, default_value_t = 64)]
        max_dim: u64,
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct WorkloadSource {
    /// Built-in layer (RN0, RN1, GNMT0, GNMT1, DB0, DB1, TF0, TF1) or `all`.
    #[arg(long, value_name = "NAME")]
    pub workload: Option<String>,
    /// CSV file with header `name,M,K,N`.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// One workload given as M,K,N.
    #[arg(long, value_name = "M,K,N", value_parser = parse_inline)]
    pub inline: Option<Workload>,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Write the table here instead of stdout; the summary goes to stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataflowArg {
    Os,
    Dos,
}

impl From<DataflowArg> for Dataflow {
    fn from(d: DataflowArg) -> Self {
        match d {
            DataflowArg::Os => Dataflow::Os,
            DataflowArg::Dos => Dataflow::Dos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TierList(pub Vec<u64>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetList(pub Vec<u64>);

pub fn parse_shape(s: &str) -> Result<ArrayShape, String> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<u64>().map_err(|_| format!("bad shape {s:?}: expected ROWSxCOLSxTIERS")))
        .collect::<Result<Vec<_>, _>>()?;
    let (r, c, t) = match nums[..] {
        [r, c] => (r, c, 1),
        [r, c, t] => (r, c, t),
        _ => return Err(format!("bad shape {s:?}: expected ROWSxCOLSxTIERS")),
    };
    ArrayShape::new(r, c, t).map_err(|e| e.to_string())
}

pub fn parse_inline(s: &str) -> Result<Workload, String> {
    let nums = s
        .split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|_| format!("bad workload {s:?}: expected M,K,N")))
        .collect::<Result<Vec<_>, _>>()?;
    match nums[..] {
        [m, k, n] => Workload::new("inline", m, k, n).map_err(|e| e.to_string()),
        _ => Err(format!("bad workload {s:?}: expected M,K,N")),
    }
}

/// A positive count written in decimal or as `2^E`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let v = match s.strip_prefix("2^") {
        Some(e) => {
            let e: u32 = e.parse().map_err(|_| format!("bad count {s:?}"))?;
            1u64.checked_shl(e).filter(|_| e < 64).ok_or(format!("2^{e} overflows"))?
        }
        None => s.parse().map_err(|_| format!("bad count {s:?}"))?,
    };
    if v == 0 {
        return Err("count must be positive".into());
    }
    Ok(v)
}

fn sorted_unique(mut v: Vec<u64>) -> Vec<u64> {
    v.sort_unstable();
    v.dedup();
    v
}

pub fn parse_tiers(s: &str) -> Result<TierList, String> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        if let Some((a, b)) = item.split_once("..") {
            let b = b.strip_prefix('=').unwrap_or(b);
            let lo = parse_count(a)?;
            let hi = parse_count(b)?;
            if lo > hi {
                return Err(format!("empty tier range {item:?}"));
            }
            out.extend(lo..=hi);
        } else {
            out.push(parse_count(item)?);
        }
    }
    Ok(TierList(sorted_unique(out)))
}

pub fn parse_budgets(s: &str) -> Result<BudgetList, String> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        if let Some((a, b)) = item.split_once("..") {
            let b = b.strip_prefix('=').unwrap_or(b);
            let (mut v, hi) = (parse_count(a)?, parse_count(b)?);
            if v > hi {
                return Err(format!("empty budget range {item:?}"));
            }
            while v <= hi {
                out.push(v);
                v = match v.checked_mul(2) {
                    Some(next) => next,
                    None => break,
                };
            }
        } else {
            out.push(parse_count(item)?);
        }
    }
    Ok(BudgetList(sorted_unique(out)))
}
