//! Verifiability-driven (1 + λ) evolution.
//!
//! Each offspring is checked against the error bound with the current
//! conflict limit. Candidates that cannot be proven within the limit get the
//! worst fitness, which steers the search toward circuits whose correctness
//! is quick to establish.

mod log;
pub mod strategy;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use log::{read_events, DecisionKind, Event, EventLog, LogMode, EVENT_LOG_HEADER};
pub use strategy::{update_limit, Strategy, StrategyParams, StrategyState, DEFAULT_DELTA};

use crate::cgp::{encode_with, Chromosome, FunctionSet, MutationPolicy};
use crate::error::{Error, Result};
use crate::netlist::{Area, Netlist};
use crate::oracle::Oracle;
use crate::verify::{check_wcae, Budget, BudgetMode, Refuter, Threshold, Verdict};

/// `f(C)`: the circuit area when the bound is proven, infinity otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Fitness {
    Finite(Area),
    Infinite,
}

/// What is known while scoring one offspring.
pub struct FitnessContext<'a> {
    pub golden: &'a Netlist,
    pub threshold: &'a Threshold,
    pub parent_size: Area,
    /// Decoded parent, for reusing its verdict on unchanged phenotypes.
    pub parent_netlist: Option<&'a Netlist>,
    pub budget: Budget,
    /// Simulation pool tried before the solver; solver counterexamples are
    /// added to it.
    pub refuter: Option<&'a mut Refuter>,
}

/// Score of one offspring and what it cost to obtain.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub fitness: Fitness,
    pub size: Area,
    pub decision: DecisionKind,
    pub conflicts: u64,
    pub netlist: Option<Netlist>,
}

/// Scores a candidate. Candidates larger than the parent are rejected
/// without calling the solver.
pub fn fitness(candidate: &Chromosome, ctx: &mut FitnessContext) -> Result<Evaluation> {
    let size = candidate.active_size();
    if size > ctx.parent_size {
        return Ok(Evaluation {
            fitness: Fitness::Infinite,
            size,
            decision: DecisionKind::Skipped,
            conflicts: 0,
            netlist: None,
        });
    }
    let netlist = candidate.decode()?;
    if ctx.parent_netlist == Some(&netlist) {
        return Ok(Evaluation {
            fitness: Fitness::Finite(size),
            size,
            decision: DecisionKind::Unsat,
            conflicts: 0,
            netlist: Some(netlist),
        });
    }
    if let Some(refuter) = ctx.refuter.as_deref_mut() {
        if refuter.refute(&netlist).is_some() {
            return Ok(Evaluation {
                fitness: Fitness::Infinite,
                size,
                decision: DecisionKind::Sat,
                conflicts: 0,
                netlist: Some(netlist),
            });
        }
    }
    let (verdict, stats) = check_wcae(ctx.golden, &netlist, ctx.threshold, &ctx.budget)?;
    let (fitness, decision) = match verdict {
        Verdict::WithinBound => (Fitness::Finite(size), DecisionKind::Unsat),
        Verdict::Violates(x) => {
            if let Some(refuter) = ctx.refuter.as_deref_mut() {
                refuter.learn(ctx.golden, &x);
            }
            (Fitness::Infinite, DecisionKind::Sat)
        }
        Verdict::Unknown => (Fitness::Infinite, DecisionKind::Undecided),
    };
    Ok(Evaluation { fitness, size, decision, conflicts: stats.conflicts, netlist: Some(netlist) })
}

/// When a run stops. Whichever bound is hit first ends the run; at least one
/// must be set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Termination {
    pub time_limit: Option<Duration>,
    pub max_generations: Option<u64>,
}

impl Termination {
    pub fn time(limit: Duration) -> Termination {
        Termination { time_limit: Some(limit), max_generations: None }
    }

    pub fn generations(count: u64) -> Termination {
        Termination { time_limit: None, max_generations: Some(count) }
    }
}

/// Everything a run needs besides the golden circuit.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub threshold: Threshold,
    pub strategy: Strategy,
    pub termination: Termination,
    pub seed: u64,
    /// Offspring per generation.
    pub lambda: usize,
    /// Mutation frequency `X` in percent of the golden gate count.
    pub mutation_freq_pct: f64,
    pub functions: FunctionSet,
    pub budget_mode: BudgetMode,
    pub log_mode: LogMode,
    /// Write real elapsed times into the event log; when false the column
    /// holds 0 so that logs of generation-bounded runs are reproducible.
    pub record_time: bool,
    /// Score offspring whose decoded circuit equals the parent's without
    /// calling the solver.
    pub reuse_parent_verdict: bool,
    /// Try each offspring on a pool of simulated inputs before calling the
    /// solver.
    pub simulation_filter: bool,
    /// Start from this circuit instead of the golden one; it must satisfy
    /// the bound.
    pub initial: Option<Netlist>,
}

impl SearchConfig {
    pub fn new(threshold: Threshold, strategy: Strategy, termination: Termination, seed: u64) -> SearchConfig {
        SearchConfig {
            threshold,
            strategy,
            termination,
            seed,
            lambda: 1,
            mutation_freq_pct: 0.5,
            functions: FunctionSet::default(),
            budget_mode: BudgetMode::PerVariable,
            log_mode: LogMode::Full,
            record_time: true,
            reuse_parent_verdict: true,
            simulation_filter: true,
            initial: None,
        }
    }
}

/// Counters of solver outcomes over a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecisionCounts {
    pub sat: u64,
    pub unsat: u64,
    pub undecided: u64,
    pub skipped: u64,
}

impl DecisionCounts {
    fn record(&mut self, d: DecisionKind) {
        match d {
            DecisionKind::Sat => self.sat += 1,
            DecisionKind::Unsat => self.unsat += 1,
            DecisionKind::Undecided => self.undecided += 1,
            DecisionKind::Skipped => self.skipped += 1,
        }
    }
}

/// Outcome of one evolutionary run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub best: Netlist,
    pub best_chromosome: Chromosome,
    pub best_size: Area,
    pub golden_size: Area,
    pub generations: u64,
    pub counts: DecisionCounts,
    pub final_limit: u64,
    pub elapsed: Duration,
}

impl RunResult {
    /// `100 * size(best) / size(golden)`.
    pub fn relative_size_pct(&self) -> f64 {
        if self.golden_size.hundredths() == 0 {
            return 100.0;
        }
        100.0 * self.best_size.hundredths() as f64 / self.golden_size.hundredths() as f64
    }
}

fn budget_for(mode: BudgetMode, limit: u64) -> Budget {
    match mode {
        BudgetMode::PerVariable => Budget::per_variable(limit),
        BudgetMode::Global => Budget::global(limit),
    }
}

/// Checks the final circuit with the oracle when the input space is small
/// and with an unlimited solver run otherwise.
fn final_check(golden: &Netlist, best: &Netlist, t: &Threshold) -> Result<bool> {
    let oracle = Oracle::default();
    if golden.num_inputs() <= oracle.max_inputs {
        let report = oracle.errors(golden, best, None)?;
        return Ok(report.max_abs <= t.abs_bound());
    }
    let (verdict, _) = check_wcae(golden, best, t, &Budget::unlimited())?;
    Ok(verdict == Verdict::WithinBound)
}

/// Runs the evolution, writing the event log as CSV to `log`.
pub fn run<W: Write>(golden: &Netlist, cfg: &SearchConfig, log: W) -> Result<RunResult> {
    if cfg.termination.time_limit.is_none() && cfg.termination.max_generations.is_none() {
        return Err(Error::Config("a run needs a time limit or a generation limit".into()));
    }
    if cfg.lambda == 0 {
        return Err(Error::Config("lambda must be at least 1".into()));
    }
    let start = Instant::now();
    let golden_size = golden.size();
    let gate_count = golden.active_gates().iter().filter(|&&a| a).count();
    let policy = MutationPolicy::from_frequency(cfg.mutation_freq_pct, gate_count)?;

    let seed_circuit = cfg.initial.as_ref().unwrap_or(golden);
    let columns = gate_count.max(seed_circuit.gates().len()).max(1);
    let mut parent = encode_with(&seed_circuit.sweep(), columns, &cfg.functions)?;
    let mut parent_netlist = parent.decode()?;
    let (verdict, _) = check_wcae(golden, &parent_netlist, &cfg.threshold, &Budget::unlimited())?;
    if verdict != Verdict::WithinBound {
        return Err(Error::UnverifiableSeed);
    }
    let mut parent_size = parent.active_size();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut refuter = cfg.simulation_filter.then(|| Refuter::new(golden, &cfg.threshold, 4, 4, &mut rng));
    let mut state = cfg.strategy.initial_state();
    let mut events = EventLog::new(log, cfg.log_mode)?;
    let mut counts = DecisionCounts::default();
    let mut generation = 0u64;
    let mut previous_limit = None;

    loop {
        if let Some(max) = cfg.termination.max_generations {
            if generation >= max {
                break;
            }
        }
        if let Some(limit) = cfg.termination.time_limit {
            if start.elapsed() >= limit {
                break;
            }
        }
        generation += 1;
        let limit = state.budget_limit();
        let mut ctx = FitnessContext {
            golden,
            threshold: &cfg.threshold,
            parent_size,
            parent_netlist: cfg.reuse_parent_verdict.then_some(&parent_netlist),
            budget: budget_for(cfg.budget_mode, limit),
            refuter: refuter.as_mut(),
        };
        let mut rows = Vec::with_capacity(cfg.lambda);
        let mut chosen: Option<(usize, Chromosome, Evaluation)> = None;
        for i in 0..cfg.lambda {
            let child = parent.mutate(&policy, &mut rng);
            let eval = fitness(&child, &mut ctx)?;
            counts.record(eval.decision);
            rows.push((eval.size, eval.decision, eval.conflicts));
            let better = match &chosen {
                None => eval.fitness <= Fitness::Finite(parent_size),
                Some((_, _, best)) => eval.fitness < best.fitness,
            };
            if better && eval.fitness != Fitness::Infinite {
                chosen = Some((i, child, eval));
            }
        }
        let mut improved_row = None;
        if let Some((i, child, eval)) = chosen {
            if eval.size < parent_size {
                improved_row = Some(i);
            }
            parent_size = eval.size;
            parent_netlist = eval.netlist.expect("verified candidates are decoded");
            parent = child;
        }
        let improvement = improved_row.is_some();
        let elapsed_ms = if cfg.record_time { start.elapsed().as_millis() as u64 } else { 0 };
        let events_of_gen: Vec<Event> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (size, decision, conflicts))| Event {
                generation,
                elapsed_ms,
                candidate_size: size,
                decision,
                conflicts,
                limit,
                best_size: parent_size,
                improvement: improved_row == Some(i),
            })
            .collect();
        events.push(events_of_gen, improvement || previous_limit != Some(limit))?;
        previous_limit = Some(limit);
        state = cfg.strategy.step(state, improvement);
    }
    events.finish()?;

    if !final_check(golden, &parent_netlist, &cfg.threshold)? {
        return Err(Error::FinalCheckFailed);
    }
    let best = parent_netlist.with_name(format!("{}_approx", golden.name()))?;
    Ok(RunResult {
        best,
        best_chromosome: parent,
        best_size: parent_size,
        golden_size,
        generations: generation,
        counts,
        final_limit: state.budget_limit(),
        elapsed: start.elapsed(),
    })
}
