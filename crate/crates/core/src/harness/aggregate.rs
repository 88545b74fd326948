//! Campaign reports: convergence curves, limit traces, relative sizes and
//! versatility scores, computed purely from the files a campaign leaves.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::stats::Summary;
use super::{load_records, RunRecord};
use crate::error::Result;
use crate::search::{read_events, Event};

/// Sampling grids of the curve reports.
#[derive(Debug, Clone, Copy)]
pub struct ReportOptions {
    pub time_step_ms: u64,
    pub generation_step: u64,
}

impl Default for ReportOptions {
    fn default() -> ReportOptions {
        ReportOptions { time_step_ms: 1000, generation_step: 100 }
    }
}

/// Rows of each report table; the first row is the header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub runs: Vec<Vec<String>>,
    pub relative_sizes: Vec<Vec<String>>,
    pub versatility: Vec<Vec<String>>,
    pub convergence: Vec<Vec<String>>,
    pub limits: Vec<Vec<String>>,
}

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

fn row<I: IntoIterator<Item = S>, S: Into<String>>(items: I) -> Vec<String> {
    items.into_iter().map(Into::into).collect()
}

type CellKey = (String, String);

struct Cell<'a> {
    ok: Vec<&'a RunRecord>,
    failed: usize,
}

fn group(records: &[RunRecord]) -> BTreeMap<CellKey, Cell<'_>> {
    let mut cells: BTreeMap<CellKey, Cell> = BTreeMap::new();
    for r in records {
        let cell = cells
            .entry((r.experiment.clone(), r.strategy.clone()))
            .or_insert_with(|| Cell { ok: Vec::new(), failed: 0 });
        if r.status == "ok" {
            cell.ok.push(r);
        } else {
            cell.failed += 1;
        }
    }
    cells
}

fn runs_table(records: &[RunRecord]) -> Vec<Vec<String>> {
    let mut t = vec![row([
        "experiment",
        "family",
        "width",
        "divisor_width",
        "wcae",
        "strategy",
        "seed",
        "time_limit",
        "golden_size",
        "final_size",
        "final_relative_pct",
        "generations",
        "sat",
        "unsat",
        "undecided",
        "skipped",
        "final_limit",
        "elapsed_ms",
        "status",
    ])];
    for r in records {
        t.push(vec![
            r.experiment.clone(),
            r.family.to_string(),
            r.width.to_string(),
            r.divisor_width.map(|d| d.to_string()).unwrap_or_default(),
            r.wcae.clone(),
            r.strategy.clone(),
            r.seed.to_string(),
            r.time_limit.map(|t| t.to_string()).unwrap_or_default(),
            format!("{:.2}", r.golden_size),
            format!("{:.2}", r.final_size),
            fmt(r.final_relative_pct),
            r.generations.to_string(),
            r.sat.to_string(),
            r.unsat.to_string(),
            r.undecided.to_string(),
            r.skipped.to_string(),
            r.final_limit.to_string(),
            r.elapsed_ms.to_string(),
            r.status.clone(),
        ]);
    }
    t
}

fn relative_table(cells: &BTreeMap<CellKey, Cell>) -> Vec<Vec<String>> {
    let mut t = vec![row(["experiment", "strategy", "runs", "failed", "min", "q1", "median", "q3", "max", "status"])];
    for ((exp, strategy), cell) in cells {
        let rel: Vec<f64> = cell.ok.iter().map(|r| r.final_relative_pct).collect();
        let mut line = vec![exp.clone(), strategy.clone(), cell.ok.len().to_string(), cell.failed.to_string()];
        match Summary::of(&rel) {
            Some(s) => {
                line.extend([s.min, s.q1, s.median, s.q3, s.max].map(fmt));
                line.push("ok".into());
            }
            None => {
                line.extend(std::iter::repeat_n(String::new(), 5));
                line.push("missing".into());
            }
        }
        t.push(line);
    }
    t
}

fn versatility_table(cells: &BTreeMap<CellKey, Cell>) -> Vec<Vec<String>> {
    let mut t = vec![row(["experiment", "strategy", "median_size", "median_relative_pct", "score", "status"])];
    // per experiment: (strategy, median size and median relative size)
    type Medians<'a> = Vec<(&'a str, Option<(f64, f64)>)>;
    let mut medians: BTreeMap<&str, Medians> = BTreeMap::new();
    for ((exp, strategy), cell) in cells {
        let sizes: Vec<f64> = cell.ok.iter().map(|r| r.final_size).collect();
        let rel: Vec<f64> = cell.ok.iter().map(|r| r.final_relative_pct).collect();
        let m = Summary::of(&sizes).zip(Summary::of(&rel)).map(|(s, r)| (s.median, r.median));
        medians.entry(exp).or_default().push((strategy, m));
    }
    for (exp, strategies) in medians {
        let best = strategies.iter().filter_map(|(_, m)| m.map(|m| m.0)).fold(f64::INFINITY, f64::min);
        for (strategy, m) in strategies {
            match m {
                Some((size, rel)) => {
                    let score = if best > 0.0 { 100.0 * size / best } else { 100.0 };
                    t.push(row([
                        exp.to_string(),
                        strategy.to_string(),
                        format!("{size:.2}"),
                        fmt(rel),
                        fmt(score),
                        "ok".into(),
                    ]));
                }
                None => t.push(row([exp, strategy, "", "", "", "missing"])),
            }
        }
    }
    t
}

/// Value of a step function given by `(x, y)` points sorted by `x`: the `y`
/// of the last point with `x <= at`.
fn step_value(points: &[(u64, f64)], at: u64) -> Option<f64> {
    let idx = points.partition_point(|p| p.0 <= at);
    idx.checked_sub(1).map(|i| points[i].1)
}

fn load_events(dir: &Path, r: &RunRecord) -> Result<Vec<Event>> {
    read_events(fs::File::open(dir.join(&r.log))?)
}

fn curve_rows(
    exp: &str,
    strategy: &str,
    traces: &[(Vec<(u64, f64)>, u64)],
    step: u64,
    fallback: impl Fn(usize) -> Option<f64>,
    t: &mut Vec<Vec<String>>,
    with_best: bool,
) {
    let end = traces.iter().map(|(_, last)| *last).max().unwrap_or(0);
    let mut at = 0;
    loop {
        let values: Vec<f64> = traces
            .iter()
            .enumerate()
            .filter(|(_, (_, last))| *last >= at)
            .filter_map(|(i, (pts, _))| step_value(pts, at).or_else(|| fallback(i)))
            .collect();
        if let Some(s) = Summary::of(&values) {
            let mut line = vec![exp.to_string(), strategy.to_string(), at.to_string(), s.n.to_string()];
            if with_best {
                line.push(format!("{:.2}", s.min));
            }
            line.extend([s.q1, s.median, s.q3].map(|v| format!("{v:.2}")));
            t.push(line);
        }
        if at >= end {
            break;
        }
        at = (at + step).min(end);
    }
}

/// Builds all report tables from the campaign directory `dir`.
pub fn aggregate(dir: &Path, options: &ReportOptions) -> Result<Report> {
    let records = load_records(dir)?;
    let cells = group(&records);
    let mut convergence = vec![row(["experiment", "strategy", "time_ms", "runs", "best", "q1", "median", "q3"])];
    let mut limits = vec![row(["experiment", "strategy", "generation", "runs", "q1", "median", "q3"])];
    for ((exp, strategy), cell) in &cells {
        let mut size_traces: Vec<(Vec<(u64, f64)>, u64)> = Vec::new();
        let mut limit_traces: Vec<(Vec<(u64, f64)>, u64)> = Vec::new();
        for r in &cell.ok {
            let events = load_events(dir, r)?;
            let last_ms = events.last().map(|e| e.elapsed_ms).unwrap_or(0);
            let last_gen = events.last().map(|e| e.generation).unwrap_or(0);
            size_traces.push((events.iter().map(|e| (e.elapsed_ms, e.best_size.um2())).collect(), last_ms));
            limit_traces.push((events.iter().map(|e| (e.generation, e.limit as f64)).collect(), last_gen));
        }
        let golden: Vec<f64> = cell.ok.iter().map(|r| r.golden_size).collect();
        curve_rows(
            exp,
            strategy,
            &size_traces,
            options.time_step_ms.max(1),
            |i| Some(golden[i]),
            &mut convergence,
            true,
        );
        let first_limits: Vec<Option<f64>> = limit_traces.iter().map(|(p, _)| p.first().map(|p| p.1)).collect();
        curve_rows(
            exp,
            strategy,
            &limit_traces,
            options.generation_step.max(1),
            |i| first_limits[i],
            &mut limits,
            false,
        );
    }
    Ok(Report {
        runs: runs_table(&records),
        relative_sizes: relative_table(&cells),
        versatility: versatility_table(&cells),
        convergence,
        limits,
    })
}

/// Writes the report tables into `dir`, returning the files written.
pub fn write_report(dir: &Path, report: &Report) -> Result<Vec<PathBuf>> {
    let tables = [
        ("runs.csv", &report.runs),
        ("relative_sizes.csv", &report.relative_sizes),
        ("versatility.csv", &report.versatility),
        ("convergence.csv", &report.convergence),
        ("limits.csv", &report.limits),
    ];
    let mut written = Vec::new();
    for (name, rows) in tables {
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
