//! Command execution: each command builds a table and a one-line summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stacksim::costmodel::{perf_per_area, CostError, LinkKind, TechParams};
use stacksim::model::{latency_3d, ModelError, Workload};
use stacksim::optimizer::{
    optimal_tiers, optimal_tiers_for, optimize_shape, sweep_budget, sweep_tiers, Budget, DesignPoint,
    OptimizeError, SweepEntry, DEFAULT_MAX_TIERS,
};
use stacksim::simulator::{
    reference_gemm, simulate_traced, utilization, Dataflow, Matrix, NullSink, SimConfig, TextTrace, TraceSink,
};
use stacksim::workloads::{builtin_table1, generate_random, load_csv, RandomRanges, WorkloadSet};

use crate::args::{Cli, Command, Output, WorkloadSource};
use crate::columns;
use crate::format::ratio;
use crate::plot::{emit_plot_data, PlotData};
use crate::verify::{random_cases, run_cases};

/// Result of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: PlotData,
    pub summary: String,
    /// Set when the command ran but its check failed.
    pub failure: Option<String>,
}

impl Report {
    fn ok(table: PlotData, summary: String) -> Self {
        Self {
            table,
            summary,
            failure: None,
        }
    }
}

pub fn load_workloads(source: &WorkloadSource) -> Result<WorkloadSet> {
    if let Some(name) = &source.workload {
        let all = builtin_table1();
        if name == "all" {
            return Ok(all);
        }
        let Some(w) = all.get(name) else {
            let known: Vec<&str> = all.entries().iter().map(|w| w.name()).collect();
            bail!("unknown built-in workload {name:?} (known: {}, all)", known.join(", "));
        };
        return Ok(WorkloadSet::new(vec![w.clone()], "builtin")?);
    }
    if let Some(path) = &source.csv {
        let set = load_csv(path)?;
        if set.is_empty() {
            bail!("{}: no workloads", path.display());
        }
        return Ok(set);
    }
    if let Some(w) = &source.inline {
        return Ok(WorkloadSet::new(vec![w.clone()], "inline")?);
    }
    bail!("no workload source given")
}

fn source_label(source: &WorkloadSource) -> String {
    match (&source.workload, &source.csv) {
        (Some(name), _) => format!("builtin {name}"),
        (_, Some(path)) => format!("csv {}", path.display()),
        _ => "inline".into(),
    }
}

fn dims(w: &Workload) -> [String; 4] {
    [w.name().to_string(), w.m().to_string(), w.k().to_string(), w.n().to_string()]
}

fn row<const N: usize>(head: [String; N], tail: impl IntoIterator<Item = String>) -> Vec<String> {
    head.into_iter().chain(tail).collect()
}

fn budget_for(macs: u64, tiers: &[u64]) -> Result<Budget> {
    let cap = tiers.iter().copied().max().unwrap_or(1).max(DEFAULT_MAX_TIERS);
    Ok(Budget::with_max_tiers(macs, cap)?)
}

fn baseline_fields(p: &DesignPoint) -> [String; 3] {
    [
        p.shape.rows().to_string(),
        p.shape.cols().to_string(),
        p.estimate.total_cycles.to_string(),
    ]
}

fn is_unbuildable(e: &OptimizeError) -> bool {
    matches!(
        e,
        OptimizeError::Infeasible { .. } | OptimizeError::Model(ModelError::TooManyTiers { .. })
    )
}

pub fn run(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Latency { source, shape, .. } => {
            let set = load_workloads(source)?;
            let mut table = PlotData::new(&columns::names(columns::LATENCY));
            table.meta("command", "latency");
            table.meta("source", source_label(source));
            table.meta("shape", shape);
            let mut total = 0u64;
            for w in set.entries() {
                let e = latency_3d(*shape, w).with_context(|| format!("{} on {shape}", w.name()))?;
                total += e.total_cycles;
                table.push(row(
                    dims(w),
                    [
                        shape.rows(),
                        shape.cols(),
                        shape.tiers(),
                        e.folds,
                        e.fold_cycles,
                        e.fill_cycles,
                        e.compute_cycles,
                        e.reduce_cycles,
                        e.drain_cycles,
                        e.total_cycles,
                    ]
                    .map(|v| v.to_string()),
                ));
            }
            let summary = match set.entries() {
                [w] => format!("{} on {shape}: {total} cycles", w.name()),
                ws => format!("{} workloads on {shape}: {total} cycles in total", ws.len()),
            };
            Ok(Report::ok(table, summary))
        }

        Command::Simulate {
            source,
            shape,
            dataflow,
            skew,
            seed,
            operand_bits,
            acc_bits,
            trace,
            ..
        } => {
            let set = load_workloads(source)?;
            if trace.is_some() && set.len() != 1 {
                bail!("--trace needs exactly one workload, got {}", set.len());
            }
            let dataflow = dataflow.map(Dataflow::from).unwrap_or(if shape.is_planar() {
                Dataflow::Os
            } else {
                Dataflow::Dos
            });
            let cfg = SimConfig {
                skew: *skew,
                operand_bits: *operand_bits,
                acc_bits: *acc_bits,
                ..SimConfig::new(*shape, dataflow)
            };
            let mut table = PlotData::new(&columns::names(columns::SIMULATE));
            table.meta("command", "simulate");
            table.meta("source", source_label(source));
            table.meta("shape", shape);
            table.meta("seed", seed);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut mismatches = Vec::new();
            let mut last = String::new();
            for w in set.entries() {
                let a = Matrix::random(w.m() as usize, w.k() as usize, *operand_bits, &mut rng);
                let b = Matrix::random(w.k() as usize, w.n() as usize, *operand_bits, &mut rng);
                let res = match trace {
                    Some(path) => {
                        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                        let mut sink = TextTrace::new(BufWriter::new(file))?;
                        let res = simulate_traced(&cfg, &a, &b, &mut sink);
                        sink.finish()?.flush()?;
                        res
                    }
                    None => simulate_traced(&cfg, &a, &b, &mut NullSink as &mut dyn TraceSink),
                }
                .with_context(|| format!("simulating {}", w.name()))?;
                let model = latency_3d(*shape, w)?.total_cycles;
                let output: Vec<i128> = res.output.as_slice().iter().map(|&v| v as i128).collect();
                let matches = output == reference_gemm(&a, &b);
                if !matches {
                    mismatches.push(w.name().to_string());
                }
                table.push(row(
                    dims(w),
                    [
                        shape.rows().to_string(),
                        shape.cols().to_string(),
                        shape.tiers().to_string(),
                        dataflow.to_string(),
                        skew.to_string(),
                        res.cycles.to_string(),
                        model.to_string(),
                        res.folds_executed.to_string(),
                        ratio(utilization(&res, *shape)?),
                        matches.to_string(),
                    ],
                ));
                last = format!(
                    "{} on {shape} ({dataflow}): {} cycles, model {model}, output {}",
                    w.name(),
                    res.cycles,
                    if matches { "matches reference" } else { "DIFFERS from reference" }
                );
            }
            let summary = if set.len() == 1 {
                last
            } else {
                format!(
                    "simulated {} workloads on {shape} ({dataflow}); {} outputs differ from reference",
                    set.len(),
                    mismatches.len()
                )
            };
            let failure = (!mismatches.is_empty())
                .then(|| format!("simulated output differs from reference GEMM for {}", mismatches.join(", ")));
            Ok(Report {
                table,
                summary,
                failure,
            })
        }

        Command::Optimize {
            source,
            macs,
            tiers,
            max_tiers,
            ..
        } => {
            let set = load_workloads(source)?;
            let budget = Budget::with_max_tiers(*macs, (*max_tiers).max(tiers.unwrap_or(1)))?;
            let mut table = PlotData::new(&columns::names(columns::OPTIMIZE));
            table.meta("command", "optimize");
            table.meta("source", source_label(source));
            table.meta("macs", macs);
            table.meta("max_tiers", budget.max_tiers());
            let mut best: Option<(String, DesignPoint)> = None;
            for w in set.entries() {
                let p = match tiers {
                    Some(t) => optimize_shape(&budget, *t, w),
                    None => optimal_tiers(&budget, w),
                }
                .with_context(|| format!("optimizing {}", w.name()))?;
                let base = optimize_shape(&budget, 1, w)?;
                table.push(row(
                    dims(w),
                    [
                        macs.to_string(),
                        p.shape.rows().to_string(),
                        p.shape.cols().to_string(),
                        p.shape.tiers().to_string(),
                        p.estimate.total_cycles.to_string(),
                        ratio(p.speedup_vs_2d),
                    ]
                    .into_iter()
                    .chain(baseline_fields(&base)),
                ));
                if best.as_ref().is_none_or(|(_, b)| p.speedup_vs_2d > b.speedup_vs_2d) {
                    best = Some((w.name().to_string(), p));
                }
            }
            let (name, p) = best.expect("workload sets are non-empty");
            let summary = if set.len() == 1 {
                format!(
                    "{name} @ {macs} MACs: {} in {} cycles, speedup {} over planar",
                    p.shape,
                    p.estimate.total_cycles,
                    ratio(p.speedup_vs_2d)
                )
            } else {
                format!(
                    "optimized {} workloads @ {macs} MACs; best speedup {} ({name}, {})",
                    set.len(),
                    ratio(p.speedup_vs_2d),
                    p.shape
                )
            };
            Ok(Report::ok(table, summary))
        }

        Command::SweepTiers { source, macs, tiers, .. } => {
            let set = load_workloads(source)?;
            let budget = budget_for(*macs, &tiers.0)?;
            let mut table = PlotData::new(&columns::names(columns::SWEEP_TIERS));
            table.meta("command", "sweep-tiers");
            table.meta("source", source_label(source));
            table.meta("macs", macs);
            let mut peak: Option<(String, u64, DesignPoint)> = None;
            for w in set.entries() {
                let sweep = sweep_tiers(&budget, w, &tiers.0).with_context(|| format!("sweeping {}", w.name()))?;
                for (t, entry) in &sweep.entries {
                    let head = [dims(w), [macs.to_string(), t.to_string(), String::new(), String::new()]].concat();
                    let mut r = head;
                    match entry {
                        SweepEntry::Point(p) => {
                            r[6] = p.shape.rows().to_string();
                            r[7] = p.shape.cols().to_string();
                            r.push(p.estimate.total_cycles.to_string());
                            r.push(ratio(p.speedup_vs_2d));
                            r.extend(baseline_fields(&sweep.baseline));
                            r.push("ok".into());
                        }
                        SweepEntry::Skipped { reason } => {
                            r.extend([String::new(), String::new()]);
                            r.extend(baseline_fields(&sweep.baseline));
                            r.push(format!("skipped: {reason}"));
                        }
                    }
                    table.push(r);
                }
                if let Some((t, p)) = sweep.best() {
                    if peak.as_ref().is_none_or(|(_, _, b)| p.speedup_vs_2d > b.speedup_vs_2d) {
                        peak = Some((w.name().to_string(), t, *p));
                    }
                }
            }
            let summary = match peak {
                None => format!("no feasible tier count @ {macs} MACs"),
                Some((name, t, p)) if set.len() == 1 => format!(
                    "{name} @ {macs} MACs: peak speedup {} at {t} tiers ({}, {} cycles)",
                    ratio(p.speedup_vs_2d),
                    p.shape,
                    p.estimate.total_cycles
                ),
                Some((name, t, p)) => format!(
                    "{} workloads @ {macs} MACs: peak speedup {} ({name} at {t} tiers)",
                    set.len(),
                    ratio(p.speedup_vs_2d)
                ),
            };
            Ok(Report::ok(table, summary))
        }

        Command::SweepMacs { source, tiers, macs, .. } => {
            let set = load_workloads(source)?;
            let mut table = PlotData::new(&columns::names(columns::SWEEP_MACS));
            table.meta("command", "sweep-macs");
            table.meta("source", source_label(source));
            table.meta("tiers", tiers);
            let mut notes = Vec::new();
            for w in set.entries() {
                let sweep = sweep_budget(*tiers, w, &macs.0).with_context(|| format!("sweeping {}", w.name()))?;
                for e in &sweep.entries {
                    let mut r = row(dims(w), [tiers.to_string(), e.macs.to_string()]);
                    match &e.entry {
                        SweepEntry::Point(p) => r.extend([
                            p.shape.rows().to_string(),
                            p.shape.cols().to_string(),
                            p.estimate.total_cycles.to_string(),
                            ratio(p.speedup_vs_2d),
                        ]),
                        SweepEntry::Skipped { .. } => r.extend(std::iter::repeat_n(String::new(), 4)),
                    }
                    r.extend(baseline_fields(&e.baseline));
                    r.push(sweep.analytic_threshold.to_string());
                    r.push(match &e.entry {
                        SweepEntry::Point(_) => "ok".into(),
                        SweepEntry::Skipped { reason } => format!("skipped: {reason}"),
                    });
                    table.push(r);
                }
                notes.push(match sweep.first_speedup_budget {
                    Some(b) => format!(
                        "{} first beats planar at {b} MACs (threshold {})",
                        w.name(),
                        sweep.analytic_threshold
                    ),
                    None => format!(
                        "{} never beats planar (threshold {})",
                        w.name(),
                        sweep.analytic_threshold
                    ),
                });
            }
            let summary = if notes.len() == 1 {
                format!("{tiers} tiers: {}", notes[0])
            } else {
                let wins = notes.iter().filter(|n| n.contains(" first beats ")).count();
                format!("{tiers} tiers: {wins} of {} workloads beat planar within the sweep", notes.len())
            };
            Ok(Report::ok(table, summary))
        }

        Command::TierStudy {
            count,
            csv,
            seed,
            macs,
            max_tiers,
            ..
        } => {
            let set = match csv {
                Some(path) => load_csv(path)?,
                None => generate_random(*count, &RandomRanges::default(), *seed)?,
            };
            let study = optimal_tiers_for(set, &macs.0, *max_tiers)?;
            let mut table = PlotData::new(&columns::names(columns::TIER_STUDY));
            table.meta("command", "tier-study");
            table.meta("source", study.workloads.source());
            table.meta("max_tiers", max_tiers);
            for b in &study.per_budget {
                table.meta(&format!("median_tiers@{}", b.macs), b.median);
            }
            for b in &study.per_budget {
                for (w, p) in study.workloads.entries().iter().zip(&b.points) {
                    let mut r = vec![b.macs.to_string()];
                    r.extend(dims(w));
                    r.extend([
                        p.shape.tiers().to_string(),
                        p.shape.rows().to_string(),
                        p.shape.cols().to_string(),
                        p.estimate.total_cycles.to_string(),
                        ratio(p.speedup_vs_2d),
                    ]);
                    table.push(r);
                }
            }
            let medians: Vec<String> = study
                .per_budget
                .iter()
                .map(|b| format!("{} MACs -> {}", b.macs, b.median))
                .collect();
            let summary = format!(
                "median optimal tiers over {} workloads: {}",
                study.workloads.len(),
                medians.join(", ")
            );
            Ok(Report::ok(table, summary))
        }

        Command::PerfArea {
            source,
            macs,
            tiers,
            link,
            tech,
            ..
        } => {
            let set = load_workloads(source)?;
            let tech_params = match tech {
                Some(path) => TechParams::load(path)?,
                None => TechParams::placeholder(),
            };
            let budget = budget_for(*macs, &tiers.0)?;
            let mut links = link.clone();
            links.sort();
            links.dedup();
            if links.contains(&LinkKind::None) {
                bail!("--link takes tsv and/or miv; single-tier rows are always added without links");
            }
            let mut table = PlotData::new(&columns::names(columns::PERF_AREA));
            table.meta("command", "perf-area");
            table.meta("source", source_label(source));
            table.meta("macs", macs);
            for line in tech_params.to_config_string().lines() {
                if let Some((k, v)) = line.split_once(" = ") {
                    table.meta(k, v);
                }
            }
            let mut best: Option<(String, u64, LinkKind, f64)> = None;
            for w in set.entries() {
                for &t in &tiers.0 {
                    let kinds: &[LinkKind] = if t == 1 { &[LinkKind::None] } else { &links };
                    for &kind in kinds {
                        let mut r = row(dims(w), [macs.to_string(), t.to_string(), kind.to_string()]);
                        match perf_per_area(w, &budget, t, kind, &tech_params) {
                            Ok(rep) => {
                                r.extend([
                                    rep.stacked.shape.rows().to_string(),
                                    rep.stacked.shape.cols().to_string(),
                                    rep.stacked.estimate.total_cycles.to_string(),
                                    ratio(rep.stacked.speedup_vs_2d),
                                    format!("{:.2}", rep.footprint),
                                    format!("{:.2}", rep.total_silicon),
                                    format!("{:.2}", rep.planar_silicon),
                                    ratio(rep.perf_per_area_vs_2d),
                                    "ok".into(),
                                ]);
                                if best.as_ref().is_none_or(|b| rep.perf_per_area_vs_2d > b.3) {
                                    best = Some((w.name().to_string(), t, kind, rep.perf_per_area_vs_2d));
                                }
                            }
                            Err(CostError::Optimize(e)) if is_unbuildable(&e) => {
                                r.extend(std::iter::repeat_n(String::new(), 8));
                                r.push(format!("skipped: {e}"));
                            }
                            Err(e) => return Err(e).with_context(|| format!("{} at {t} tiers", w.name())),
                        }
                        table.push(r);
                    }
                }
            }
            let summary = match best {
                Some((name, t, kind, v)) => format!(
                    "@ {macs} MACs: best perf/area {} vs planar ({name}, {t} tiers, {kind})",
                    ratio(v)
                ),
                None => format!("no feasible configuration @ {macs} MACs"),
            };
            Ok(Report::ok(table, summary))
        }

        Command::Verify {
            max_macs,
            max_dim,
            cases,
            seed,
            ..
        } => {
            if *cases == 0 {
                bail!("--cases must be at least 1");
            }
            if *max_macs == 0 || *max_dim == 0 {
                bail!("--max-macs and --max-dim must be positive");
            }
            let outcomes = run_cases(&random_cases(*cases, *max_macs, *max_dim, *seed))?;
            let mut table = PlotData::new(&columns::names(columns::VERIFY));
            table.meta("command", "verify");
            table.meta("seed", seed);
            table.meta("max_macs", max_macs);
            table.meta("max_dim", max_dim);
            for o in &outcomes {
                table.push(vec![
                    o.index.to_string(),
                    o.m.to_string(),
                    o.k.to_string(),
                    o.n.to_string(),
                    o.shape.rows().to_string(),
                    o.shape.cols().to_string(),
                    o.shape.tiers().to_string(),
                    o.dataflow.to_string(),
                    o.cycles.to_string(),
                    o.model_cycles.to_string(),
                    o.cycles_match().to_string(),
                    o.output_match.to_string(),
                ]);
            }
            let bad: Vec<usize> = outcomes.iter().filter(|o| !o.passed()).map(|o| o.index).collect();
            let summary = format!(
                "verify: {}/{} cases match reference GEMM and model cycles",
                outcomes.len() - bad.len(),
                outcomes.len()
            );
            let failure = (!bad.is_empty()).then(|| format!("{} cases disagree, first is case {}", bad.len(), bad[0]));
            Ok(Report {
                table,
                summary,
                failure,
            })
        }
    }
}

fn output_of(command: &Command) -> &Output {
    match command {
        Command::Latency { output, .. }
        | Command::Simulate { output, .. }
        | Command::Optimize { output, .. }
        | Command::SweepTiers { output, .. }
        | Command::SweepMacs { output, .. }
        | Command::TierStudy { output, .. }
        | Command::PerfArea { output, .. }
        | Command::Verify { output, .. } => output,
    }
}

/// Runs `cli` and writes its table and summary. With `--out` the table goes
/// to the file and the summary to `stdout`; otherwise the table goes to
/// `stdout` and the summary to `stderr`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let out = output_of(&cli.command).out.as_deref();
    if let Some(path) = out {
        check_writable(path)?;
    }
    let report = run(cli)?;
    match out {
        Some(path) => {
            emit_plot_data(&report.table, path)?;
            writeln!(stdout, "{}", report.summary)?;
        }
        None => {
            report.table.write(&mut *stdout)?;
            writeln!(stderr, "{}", report.summary)?;
        }
    }
    match report.failure {
        Some(msg) => bail!(msg),
        None => Ok(()),
    }
}

fn check_writable(path: &Path) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        bail!("cannot write {}: {} is not a directory", path.display(), parent.display());
    }
    if path.is_dir() {
        bail!("cannot write {}: it is a directory", path.display());
    }
    Ok(())
}
