//! Multi-run experiment campaigns and their aggregation.
//!
//! A campaign file lists experiments; each experiment expands into one cell
//! per strategy and one run per replication, seeded `base_seed + i`. Every
//! run leaves an event log, the final netlist and a summary in the output
//! directory. Runs whose summary already exists are skipped, so an
//! interrupted campaign resumes where it stopped.

mod aggregate;
mod stats;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use aggregate::{aggregate, write_report, Report, ReportOptions};
pub use stats::{lower_median, quantile, Summary};

use crate::error::{Error, Result};
use crate::genlib::{generate, Family, GoldenSpec};
use crate::search::{run, LogMode, SearchConfig, Strategy, Termination};
use crate::verify::Threshold;

/// Default heartbeat of sparse campaign logs, in generations.
pub const DEFAULT_HEARTBEAT: u64 = 1000;

fn default_replications() -> usize {
    1
}

fn default_lambda() -> usize {
    1
}

fn default_mutation_freq() -> f64 {
    0.5
}

/// One experiment: a golden circuit and error bound, run under several
/// strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub family: Family,
    pub width: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divisor_width: Option<usize>,
    /// Error bound as a fraction of the output range, e.g. `"1%"`.
    pub wcae: String,
    pub strategies: Vec<String>,
    /// Seconds per run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit: Option<f64>,
    /// Generations per run; with no time limit the logs are reproducible
    /// byte for byte.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generations: Option<u64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_lambda")]
    pub lambda: usize,
    #[serde(default = "default_mutation_freq")]
    pub mutation_freq: f64,
}

impl Experiment {
    pub fn spec(&self) -> GoldenSpec {
        GoldenSpec { family: self.family, width: self.width, divisor_width: self.divisor_width }
    }

    /// Directory-safe identifier, e.g. `multiplier8_wcae1pct`.
    pub fn id(&self) -> String {
        let bound: String = self
            .wcae
            .chars()
            .map(|c| match c {
                '%' => "pct".to_string(),
                '/' => "_".to_string(),
                '.' => "p".to_string(),
                c if c.is_ascii_alphanumeric() => c.to_string(),
                _ => String::new(),
            })
            .collect();
        format!("{}_wcae{bound}", self.spec().name())
    }

    fn termination(&self) -> Result<Termination> {
        let t =
            Termination { time_limit: self.time_limit.map(Duration::from_secs_f64), max_generations: self.generations };
        if t.time_limit.is_none() && t.max_generations.is_none() {
            return Err(Error::Config(format!("experiment {} needs time_limit or generations", self.id())));
        }
        Ok(t)
    }
}

/// Contents of a campaign file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Campaign {
    /// Results directory; relative paths are taken from the campaign file's
    /// directory.
    pub output_dir: PathBuf,
    /// `"sparse"` (default) or `"full"`.
    #[serde(default)]
    pub log: Option<String>,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<Experiment>,
}

impl Campaign {
    pub fn parse(text: &str) -> Result<Campaign> {
        let c: Campaign = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Campaign> {
        let mut c = Campaign::parse(&fs::read_to_string(path)?)?;
        if c.output_dir.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            c.output_dir = base.join(&c.output_dir);
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiments.is_empty() {
            return Err(Error::Config("campaign has no experiments".into()));
        }
        self.log_mode()?;
        for e in &self.experiments {
            if e.replications == 0 {
                return Err(Error::Config(format!("experiment {}: replications must be at least 1", e.id())));
            }
            if e.strategies.is_empty() {
                return Err(Error::Config(format!("experiment {}: no strategies", e.id())));
            }
            e.termination()?;
            Threshold::parse(&e.wcae, e.spec().num_outputs())?;
            for s in &e.strategies {
                s.parse::<Strategy>()?;
            }
        }
        Ok(())
    }

    pub fn log_mode(&self) -> Result<LogMode> {
        match self.log.as_deref() {
            None | Some("sparse") => Ok(LogMode::Sparse { heartbeat: DEFAULT_HEARTBEAT }),
            Some("full") => Ok(LogMode::Full),
            Some(other) => Err(Error::Config(format!("unknown log mode `{other}`"))),
        }
    }

    /// Every (experiment, strategy, seed) run of the campaign.
    pub fn cells(&self) -> Vec<RunCell> {
        let mut cells = Vec::new();
        for (index, e) in self.experiments.iter().enumerate() {
            for s in &e.strategies {
                for i in 0..e.replications {
                    cells.push(RunCell { experiment: index, strategy: s.clone(), seed: e.base_seed + i as u64 });
                }
            }
        }
        cells
    }

    fn run_dir(&self, e: &Experiment, strategy: &str) -> PathBuf {
        let safe: String =
            strategy.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
        self.output_dir.join("runs").join(e.id()).join(safe)
    }
}

/// One run of a campaign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunCell {
    pub experiment: usize,
    pub strategy: String,
    pub seed: u64,
}

/// Persisted summary of a finished run; one row of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub family: Family,
    pub width: usize,
    pub divisor_width: Option<usize>,
    pub wcae: String,
    pub strategy: String,
    pub seed: u64,
    pub time_limit: Option<f64>,
    pub golden_size: f64,
    pub final_size: f64,
    pub final_relative_pct: f64,
    pub generations: u64,
    pub sat: u64,
    pub unsat: u64,
    pub undecided: u64,
    pub skipped: u64,
    pub final_limit: u64,
    pub elapsed_ms: u64,
    /// `ok`, or the error message of a failed run.
    pub status: String,
    /// Event log, relative to the campaign output directory.
    pub log: String,
}

/// Paths of one run's artifacts.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub log: PathBuf,
    pub netlist: PathBuf,
    pub summary: PathBuf,
}

impl RunPaths {
    fn new(dir: &Path, seed: u64) -> RunPaths {
        RunPaths {
            log: dir.join(format!("seed{seed}.csv")),
            netlist: dir.join(format!("seed{seed}.net")),
            summary: dir.join(format!("seed{seed}.toml")),
        }
    }
}

/// Counts of a `run_campaign` call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CampaignOutcome {
    pub executed: usize,
    pub skipped: usize,
    pub failed: usize,
}

fn execute(campaign: &Campaign, cell: &RunCell, paths: &RunPaths) -> Result<RunRecord> {
    let e = &campaign.experiments[cell.experiment];
    let spec = e.spec();
    let golden = generate(&spec)?;
    let threshold = Threshold::parse(&e.wcae, golden.num_outputs())?;
    let strategy: Strategy = cell.strategy.parse()?;
    let mut cfg = SearchConfig::new(threshold, strategy, e.termination()?, cell.seed);
    cfg.lambda = e.lambda;
    cfg.mutation_freq_pct = e.mutation_freq;
    cfg.log_mode = campaign.log_mode()?;
    cfg.record_time = e.time_limit.is_some();
    let tmp_log = paths.log.with_extension("csv.part");
    let result = run(&golden, &cfg, BufWriter::new(fs::File::create(&tmp_log)?))?;
    fs::rename(&tmp_log, &paths.log)?;
    fs::write(&paths.netlist, result.best.to_text())?;
    Ok(RunRecord {
        experiment: e.id(),
        family: e.family,
        width: e.width,
        divisor_width: e.divisor_width,
        wcae: e.wcae.clone(),
        strategy: cell.strategy.clone(),
        seed: cell.seed,
        time_limit: e.time_limit,
        golden_size: result.golden_size.um2(),
        final_size: result.best_size.um2(),
        final_relative_pct: result.relative_size_pct(),
        generations: result.generations,
        sat: result.counts.sat,
        unsat: result.counts.unsat,
        undecided: result.counts.undecided,
        skipped: result.counts.skipped,
        final_limit: result.final_limit,
        elapsed_ms: result.elapsed.as_millis() as u64,
        status: "ok".into(),
        log: relative_to(&paths.log, &campaign.output_dir),
    })
}

fn relative_to(path: &Path, base: &Path) -> String {
    path.strip_prefix(base).unwrap_or(path).to_string_lossy().into_owned()
}

/// Executes every run that has no summary yet. `jobs` bounds the number of
/// concurrent runs (0 = one per core). Failed runs are recorded with their
/// error and do not stop the campaign.
pub fn run_campaign(campaign: &Campaign, jobs: usize) -> Result<CampaignOutcome> {
    campaign.validate()?;
    fs::create_dir_all(&campaign.output_dir)?;
    fs::write(campaign.output_dir.join("campaign.toml"), toml::to_string(campaign).map_err(config_err)?)?;
    let mut todo = Vec::new();
    let mut outcome = CampaignOutcome::default();
    for cell in campaign.cells() {
        let dir = campaign.run_dir(&campaign.experiments[cell.experiment], &cell.strategy);
        fs::create_dir_all(&dir)?;
        let paths = RunPaths::new(&dir, cell.seed);
        if paths.summary.exists() {
            outcome.skipped += 1;
        } else {
            todo.push((cell, paths));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(config_err)?;
    let results: Vec<Result<bool>> = pool.install(|| {
        todo.par_iter()
            .map(|(cell, paths)| {
                let (record, ok) = match execute(campaign, cell, paths) {
                    Ok(r) => (r, true),
                    Err(err) => {
                        let e = &campaign.experiments[cell.experiment];
                        (failed_record(e, cell, &err.to_string()), false)
                    }
                };
                fs::write(&paths.summary, toml::to_string(&record).map_err(config_err)?)?;
                Ok(ok)
            })
            .collect()
    });
    for r in results {
        if r? {
            outcome.executed += 1;
        } else {
            outcome.failed += 1;
        }
    }
    Ok(outcome)
}

fn failed_record(e: &Experiment, cell: &RunCell, message: &str) -> RunRecord {
    RunRecord {
        experiment: e.id(),
        family: e.family,
        width: e.width,
        divisor_width: e.divisor_width,
        wcae: e.wcae.clone(),
        strategy: cell.strategy.clone(),
        seed: cell.seed,
        time_limit: e.time_limit,
        golden_size: 0.0,
        final_size: 0.0,
        final_relative_pct: 0.0,
        generations: 0,
        sat: 0,
        unsat: 0,
        undecided: 0,
        skipped: 0,
        final_limit: 0,
        elapsed_ms: 0,
        status: format!("error: {message}"),
        log: String::new(),
    }
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

/// Reads every run summary below `dir/runs`, sorted by experiment, strategy
/// and seed.
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>> {
    let mut records = Vec::new();
    let mut stack = vec![dir.join("runs")];
    while let Some(d) = stack.pop() {
        if !d.is_dir() {
            continue;
        }
        for entry in fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|x| x == "toml") {
                let text = fs::read_to_string(&path)?;
                records.push(toml::from_str::<RunRecord>(&text)?);
            }
        }
    }
    records.sort_by(|a, b| (&a.experiment, &a.strategy, a.seed).cmp(&(&b.experiment, &b.strategy, b.seed)));
    Ok(records)
}
