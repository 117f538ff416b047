//! Output columns per command. The same tables produce the CSV headers and
//! the column reference in `--help`.

pub struct Column {
    pub name: &'static str,
    pub doc: &'static str,
}

const fn col(name: &'static str, doc: &'static str) -> Column {
    Column { name, doc }
}

const WORKLOAD: Column = col("workload", "workload name");
const M: Column = col("M", "rows of A and of the output");
const K: Column = col("K", "reduction dimension");
const N: Column = col("N", "columns of B and of the output");
const MACS: Column = col("macs", "MAC budget shared by all tiers");
const ROWS: Column = col("rows", "array rows per tier");
const COLS: Column = col("cols", "array columns per tier");
const TIERS: Column = col("tiers", "stacked tiers");
const TOTAL: Column = col("total_cycles", "end-to-end cycles, all folds");
const SPEEDUP: Column = col("speedup_vs_2d", "planar baseline cycles over stacked cycles (4 significant digits)");
const BASE_ROWS: Column = col("baseline_rows", "rows of the optimal planar array with the same budget");
const BASE_COLS: Column = col("baseline_cols", "columns of the optimal planar array with the same budget");
const BASE_CYCLES: Column = col("baseline_cycles", "cycles of the optimal planar array with the same budget");
const STATUS: Column = col("status", "`ok`, or `skipped: <reason>` when the point cannot be built");

pub const LATENCY: &[Column] = &[
    WORKLOAD,
    M,
    K,
    N,
    ROWS,
    COLS,
    TIERS,
    col("folds", "output tiles processed one after another"),
    col("fold_cycles", "cycles per fold"),
    col("fill_cycles", "per fold: operand skew until the far corner starts"),
    col("compute_cycles", "per fold: MAC steps of the largest K slice"),
    col("reduce_cycles", "per fold: hops merging partial sums across tiers"),
    col("drain_cycles", "per fold: shifting results out of the bottom tier"),
    TOTAL,
];

pub const SIMULATE: &[Column] = &[
    WORKLOAD,
    M,
    K,
    N,
    ROWS,
    COLS,
    TIERS,
    col("dataflow", "`os` (planar) or `dos` (distributed across tiers)"),
    col("skew", "cycles between adjacent rows, columns and tiers"),
    col("cycles", "simulated cycles"),
    col("model_cycles", "analytical cycles for the same shape"),
    col("folds", "folds the simulator executed"),
    col("utilization", "busy MAC-cycles over all MAC-cycles (4 significant digits)"),
    col("output_matches_reference", "`true` if the result equals a reference GEMM"),
];

pub const OPTIMIZE: &[Column] = &[
    WORKLOAD, M, K, N, MACS, ROWS, COLS, TIERS, TOTAL, SPEEDUP, BASE_ROWS, BASE_COLS, BASE_CYCLES,
];

pub const SWEEP_TIERS: &[Column] = &[
    WORKLOAD, M, K, N, MACS, TIERS, ROWS, COLS, TOTAL, SPEEDUP, BASE_ROWS, BASE_COLS, BASE_CYCLES, STATUS,
];

pub const SWEEP_MACS: &[Column] = &[
    WORKLOAD,
    M,
    K,
    N,
    TIERS,
    MACS,
    ROWS,
    COLS,
    TOTAL,
    SPEEDUP,
    BASE_ROWS,
    BASE_COLS,
    BASE_CYCLES,
    col("analytic_threshold", "M*N: budgets at or below it cannot beat the planar array"),
    STATUS,
];

pub const TIER_STUDY: &[Column] = &[
    MACS,
    WORKLOAD,
    M,
    K,
    N,
    col("optimal_tiers", "tier count with the lowest optimized latency"),
    ROWS,
    COLS,
    TOTAL,
    SPEEDUP,
];

pub const PERF_AREA: &[Column] = &[
    WORKLOAD,
    M,
    K,
    N,
    MACS,
    TIERS,
    col("link", "vertical link technology: none, tsv or miv"),
    ROWS,
    COLS,
    TOTAL,
    SPEEDUP,
    col("footprint_um2", "largest tier area in um^2 (2 decimals)"),
    col("total_silicon_um2", "summed area of all tiers in um^2, overhead included (2 decimals)"),
    col("planar_silicon_um2", "area of the planar array with the same budget in um^2 (2 decimals)"),
    col("perf_per_area_vs_2d", "(1/cycles/silicon) relative to the planar array (4 significant digits)"),
    STATUS,
];

pub const VERIFY: &[Column] = &[
    col("case", "case index"),
    M,
    K,
    N,
    ROWS,
    COLS,
    TIERS,
    col("dataflow", "`os` or `dos`"),
    col("cycles", "simulated cycles"),
    col("model_cycles", "analytical cycles"),
    col("cycles_match", "`true` if simulated and analytical cycles agree"),
    col("output_match", "`true` if the result equals a reference GEMM"),
];

pub fn names(columns: &[Column]) -> Vec<&'static str> {
    columns.iter().map(|c| c.name).collect()
}

/// Column reference appended to a command's help text.
pub fn help(columns: &[Column]) -> String {
    let width = columns.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::from("Output columns:\n");
    for c in columns {
        out.push_str(&format!("  {:width$}  {}\n", c.name, c.doc));
    }
    out
}
