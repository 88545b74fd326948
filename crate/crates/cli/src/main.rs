use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_rational::Ratio;

use vdsynth::genlib::{generate, Family, GoldenSpec};
use vdsynth::harness::{aggregate, run_campaign, write_report, Campaign, ReportOptions};
use vdsynth::netlist::Netlist;
use vdsynth::oracle::Oracle;
use vdsynth::search::{run, LogMode, SearchConfig, Strategy, Termination};
use vdsynth::verify::{
    build_miter_with, check_wcae_with, encode_cnf, witness_hex, Budget, MiterStyle, Threshold, Verdict,
};

#[derive(Parser, Debug)]
#[command(name = "vdsynth", version, about = "Approximate arithmetic circuit synthesis under a worst-case error bound")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write an exact arithmetic circuit.
    Generate {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        width: usize,
        /// Divisor width of dividers (defaults to the dividend width).
        #[arg(long)]
        divisor_width: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a candidate against a golden circuit and an error bound.
    Verify {
        #[arg(long)]
        golden: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        /// Bound as a fraction of the output range: 0.001, 0.1%, 1/255.
        #[arg(long)]
        wcae: String,
        /// Conflict limit per variable; unlimited when omitted.
        #[arg(long)]
        limit: Option<u64>,
        #[arg(long, value_enum, default_value_t = BudgetArg::PerVariable)]
        budget_mode: BudgetArg,
        #[arg(long, value_enum, default_value_t = MiterArg::Plain)]
        miter: MiterArg,
        /// Also write the miter CNF in DIMACS format.
        #[arg(long)]
        dump_cnf: Option<PathBuf>,
    },
    /// Evolve a smaller circuit within the error bound.
    Approximate {
        #[arg(long)]
        golden: PathBuf,
        #[arg(long)]
        wcae: String,
        /// lim100, lim2K, lim10K, lim20K, lim50K, ada1..ada5 or custom:<file>.
        #[arg(long, default_value = "ada2")]
        strategy: String,
        /// Seconds of evolution.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Stop after this many generations.
        #[arg(long)]
        generations: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        lambda: usize,
        /// Mutation frequency in percent of the golden gate count.
        #[arg(long, default_value_t = 0.5)]
        mutation_freq: f64,
        #[arg(long, value_enum, default_value_t = BudgetArg::PerVariable)]
        budget_mode: BudgetArg,
        #[arg(long)]
        out: PathBuf,
        /// Event log (CSV).
        #[arg(long)]
        log: Option<PathBuf>,
        /// Log only improvements, limit changes and every N-th generation.
        #[arg(long, value_name = "N")]
        sparse_log: Option<u64>,
        /// Write 0 instead of elapsed times into the log.
        #[arg(long)]
        no_timing: bool,
    },
    /// Exact error metrics by exhaustive simulation.
    Errors {
        #[arg(long)]
        golden: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        /// Also count inputs violating this bound.
        #[arg(long)]
        wcae: Option<String>,
        #[arg(long, default_value_t = vdsynth::oracle::DEFAULT_MAX_INPUTS)]
        max_inputs: usize,
    },
    /// Multi-run experiment campaigns.
    Campaign {
        #[command(subcommand)]
        command: CampaignCommand,
    },
}

#[derive(Subcommand, Debug)]
enum CampaignCommand {
    /// Execute every run of a campaign file that has not finished yet.
    Run {
        file: PathBuf,
        /// Concurrent runs (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Aggregate a campaign directory into CSV reports.
    Report {
        dir: PathBuf,
        #[arg(long, default_value_t = 1000)]
        time_step_ms: u64,
        #[arg(long, default_value_t = 100)]
        generation_step: u64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MiterArg {
    Plain,
    CarryChain,
}

impl From<MiterArg> for MiterStyle {
    fn from(m: MiterArg) -> MiterStyle {
        match m {
            MiterArg::Plain => MiterStyle::Plain,
            MiterArg::CarryChain => MiterStyle::CarryChain,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum BudgetArg {
    PerVariable,
    Global,
}

impl BudgetArg {
    fn budget(self, limit: Option<u64>) -> Budget {
        match (self, limit) {
            (_, None) => Budget::unlimited(),
            (BudgetArg::PerVariable, Some(l)) => Budget::per_variable(l),
            (BudgetArg::Global, Some(l)) => Budget::global(l),
        }
    }

    fn mode(self) -> vdsynth::verify::BudgetMode {
        match self {
            BudgetArg::PerVariable => vdsynth::verify::BudgetMode::PerVariable,
            BudgetArg::Global => vdsynth::verify::BudgetMode::Global,
        }
    }
}

fn read_netlist(path: &Path) -> Result<Netlist> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Netlist::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn ratio_decimal(r: Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { family, width, divisor_width, out } => {
            let spec = GoldenSpec { family, width, divisor_width };
            let c = generate(&spec)?;
            fs::write(&out, c.to_text()).with_context(|| format!("writing {}", out.display()))?;
            let stats = vdsynth::genlib::gate_stats(&c);
            println!(
                "{}: {} inputs, {} outputs, {} gates ({} xor), depth {}, size {} um2",
                c.name(),
                c.num_inputs(),
                c.num_outputs(),
                stats.gates,
                stats.xors,
                stats.depth,
                c.size()
            );
        }
        Command::Verify { golden, candidate, wcae, limit, budget_mode, miter, dump_cnf } => {
            let g = read_netlist(&golden)?;
            let c = read_netlist(&candidate)?;
            let t = Threshold::parse(&wcae, g.num_outputs())?;
            if let Some(path) = dump_cnf {
                let enc = encode_cnf(&build_miter_with(&g, &c, &t, miter.into())?);
                enc.cnf.write_dimacs(BufWriter::new(fs::File::create(&path)?))?;
            }
            let (verdict, stats) = check_wcae_with(&g, &c, &t, &budget_mode.budget(limit), miter.into())?;
            match verdict {
                Verdict::WithinBound => println!("WITHIN_BOUND"),
                Verdict::Violates(x) => println!("VIOLATES witness={}", witness_hex(&x)),
                Verdict::Unknown => println!("UNKNOWN"),
            }
            println!(
                "threshold {t}; conflicts {}, decisions {}, propagations {}",
                stats.conflicts, stats.decisions, stats.propagations
            );
        }
        Command::Approximate {
            golden,
            wcae,
            strategy,
            time_limit,
            generations,
            seed,
            lambda,
            mutation_freq,
            budget_mode,
            out,
            log,
            sparse_log,
            no_timing,
        } => {
            if time_limit.is_none() && generations.is_none() {
                bail!("give --time-limit and/or --generations");
            }
            let g = read_netlist(&golden)?;
            let t = Threshold::parse(&wcae, g.num_outputs())?;
            let strategy: Strategy = strategy.parse()?;
            let termination =
                Termination { time_limit: time_limit.map(Duration::from_secs_f64), max_generations: generations };
            let mut cfg = SearchConfig::new(t, strategy, termination, seed);
            cfg.lambda = lambda;
            cfg.mutation_freq_pct = mutation_freq;
            cfg.budget_mode = budget_mode.mode();
            cfg.record_time = !no_timing;
            if let Some(heartbeat) = sparse_log {
                cfg.log_mode = LogMode::Sparse { heartbeat };
            }
            let result = match &log {
                Some(path) => run(&g, &cfg, BufWriter::new(fs::File::create(path)?))?,
                None => run(&g, &cfg, std::io::sink())?,
            };
            fs::write(&out, result.best.to_text())?;
            println!(
                "size {} -> {} um2 ({:.2}%), {} generations, final limit {}",
                result.golden_size,
                result.best_size,
                result.relative_size_pct(),
                result.generations,
                result.final_limit
            );
            let c = &result.counts;
            println!("decisions: {} sat, {} unsat, {} undecided, {} skipped", c.sat, c.unsat, c.undecided, c.skipped);
        }
        Command::Errors { golden, candidate, wcae, max_inputs } => {
            let g = read_netlist(&golden)?;
            let c = read_netlist(&candidate)?;
            let t = wcae.map(|w| Threshold::parse(&w, g.num_outputs())).transpose()?;
            let r = Oracle::new(max_inputs).errors(&g, &c, t.as_ref())?;
            println!("wcae {} ({:.6})", r.wcae, ratio_decimal(r.wcae));
            println!("witness {}", witness_hex(&r.witness_bits()));
            println!("mae {} ({:.6})", r.mae, ratio_decimal(r.mae));
            println!("max_abs {}", r.max_abs);
            if let (Some(t), Some(count)) = (t, r.violation_count) {
                println!("violations {count} (|e| > {})", t.abs_bound());
            }
        }
        Command::Campaign { command } => match command {
            CampaignCommand::Run { file, jobs } => {
                let campaign = Campaign::load(&file)?;
                let outcome = run_campaign(&campaign, jobs)?;
                println!(
                    "{} runs executed, {} already complete, {} failed; results in {}",
                    outcome.executed,
                    outcome.skipped,
                    outcome.failed,
                    campaign.output_dir.display()
                );
            }
            CampaignCommand::Report { dir, time_step_ms, generation_step } => {
                let report = aggregate(&dir, &ReportOptions { time_step_ms, generation_step })?;
                for path in write_report(&dir, &report)? {
                    println!("{}", path.display());
                }
            }
        },
    }
    Ok(())
}
