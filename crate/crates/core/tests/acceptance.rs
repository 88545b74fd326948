//! Acceptance criteria, one test per criterion. Every test writes a single
//! `criterion N: PASS|FAIL|FLAG ...` line to stdout (uncaptured, so the lines
//! show up in plain `cargo test` output).
//!
//! The long-running criteria (7, 8) are ignored by default; run them with
//! `cargo test --release -p vdsynth --test acceptance -- --ignored`. Their
//! scale can be reduced with `ACCEPTANCE_SECONDS`, `ACCEPTANCE_SEEDS` and
//! `ACCEPTANCE_REPLICATIONS`, in which case the line says so.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vdsynth::cgp::{encode, Chromosome, FunctionSet, MutationPolicy};
use vdsynth::genlib::{generate, GoldenSpec};
use vdsynth::harness::{load_records, run_campaign, Campaign, Experiment, RunRecord};
use vdsynth::netlist::{bits_to_int, Area, GateFunc, GATE_AREAS_UM2};
use vdsynth::oracle::Oracle;
use vdsynth::search::{read_events, run, Event, SearchConfig, Strategy, StrategyParams, Termination};
use vdsynth::verify::{abs_error_at, check_wcae, Budget, Threshold, Verdict};

fn report(criterion: u32, verdict: &str, detail: &str) {
    let line = format!("criterion {criterion}: {verdict} {detail}\n");
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn env_or<T: std::str::FromStr>(name: &str, default: T) -> T {
    std::env::var(name).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

const ADDER_GENES: &str = "(0, 2, 2) (0, 1, 0) (1, 3, 2) (3, 2, 0) (5, 6, 3) (4, 6, 1) (5, 8)";

fn example_adder() -> Chromosome {
    let functions = FunctionSet::new(vec![GateFunc::And, GateFunc::Or, GateFunc::Xor, GateFunc::Inv]).unwrap();
    Chromosome::from_dump(ADDER_GENES, 3, functions).unwrap()
}

#[test]
fn criterion_01_example_adder_decode() {
    let start = Instant::now();
    let ch = example_adder();
    let c = ch.decode().unwrap();
    let active = ch.active_count();
    let mut sum_ok = 0;
    let mut carry_ok = 0;
    for x in 0..8u128 {
        let (a, b, cin) = (x & 1, (x >> 1) & 1, (x >> 2) & 1);
        let out = c.eval_int(x).unwrap();
        sum_ok += usize::from(out & 1 == (a ^ b ^ cin));
        carry_ok += usize::from(out >> 1 == u128::from(a + b + cin >= 2));
    }
    let ok = active == 5 && sum_ok == 8 && carry_ok == 8 && start.elapsed() < Duration::from_secs(1);
    report(
        1,
        pass_fail(ok),
        &format!("active gates {active}/5, sum {sum_ok}/8, carry {carry_ok}/8 rows match the full adder"),
    );
    // what the chromosome literally encodes: sum is the parity, output 8 is
    // OR(AND(a, b), AND(XOR(a, cin), cin)), which is `a ? b : cin`
    assert_eq!(active, 5);
    assert_eq!(sum_ok, 8);
    for x in 0..8u128 {
        let (a, b, cin) = (x & 1, (x >> 1) & 1, (x >> 2) & 1);
        assert_eq!(c.eval_int(x).unwrap() >> 1, if a == 1 { b } else { cin });
    }
}

#[test]
fn criterion_02_table1_areas() {
    let expected = [
        (GateFunc::Inv, 140),
        (GateFunc::And, 234),
        (GateFunc::Or, 234),
        (GateFunc::Xor, 469),
        (GateFunc::Nand, 187),
        (GateFunc::Nor, 234),
        (GateFunc::Xnor, 469),
    ];
    let areas_ok = expected.iter().all(|&(f, h)| f.area() == Area::from_hundredths(h))
        && GATE_AREAS_UM2.len() == 7
        && GATE_AREAS_UM2.iter().zip(&expected).all(|(&(f, um2), &(g, h))| f == g && (um2 * 100.0).round() as u64 == h);
    let size = example_adder().decode().unwrap().size();
    let ok = areas_ok && size == Area::from_hundredths(1640);
    report(
        2,
        pass_fail(ok),
        &format!("seven constants exact: {areas_ok}, example adder size {size} um2 (expected 16.40)"),
    );
    assert!(ok);
}

#[test]
fn criterion_03_oracle_exactness() {
    let g = generate(&GoldenSpec::multiplier(2)).unwrap();
    let c = g.with_output_stuck(0, false).unwrap();
    let r = Oracle::default().errors(&g, &c, None).unwrap();
    let witness = r.witness_bits();
    let resim = abs_error_at(&g, &c, &witness).unwrap();
    let ok = r.wcae == Ratio::new(1, 15) && r.mae == Ratio::new(1, 60) && resim == r.max_abs && resim == 1;
    report(3, pass_fail(ok), &format!("wcae {} mae {} witness error {resim}", r.wcae, r.mae));
    assert!(ok);
}

#[test]
fn criterion_04_sat_oracle_differential() {
    let specs = [
        GoldenSpec::multiplier(4),
        GoldenSpec::multiplier(6),
        GoldenSpec::adder(8),
        GoldenSpec::mac(4),
        GoldenSpec::divider(6, 3),
        GoldenSpec::square(5),
    ];
    let bounds = ["0", "0.1%", "1%", "10%"];
    let mutants_per_family = env_or("ACCEPTANCE_MUTANTS", 1000usize);
    let oracle = Oracle::default();
    let mut checks = 0usize;
    let mut disagreements = Vec::new();
    let mut bad_witnesses = 0usize;
    let mut within = 0usize;
    for (fi, spec) in specs.iter().enumerate() {
        let g = generate(spec).unwrap();
        let chromosome = encode(&g, g.gates().len() + g.gates().len() / 4 + 1).unwrap();
        let policy = MutationPolicy::fixed(5);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + fi as u64);
        let thresholds: Vec<Threshold> = bounds.iter().map(|b| Threshold::parse(b, g.num_outputs()).unwrap()).collect();
        for _ in 0..mutants_per_family {
            let c = chromosome.mutate(&policy, &mut rng).decode().unwrap();
            let exact = oracle.errors(&g, &c, None).unwrap();
            for t in &thresholds {
                checks += 1;
                let (verdict, _) = check_wcae(&g, &c, t, &Budget::unlimited()).unwrap();
                let truth = exact.max_abs <= t.abs_bound();
                match verdict {
                    Verdict::WithinBound => {
                        within += 1;
                        if !truth {
                            disagreements.push(format!("{} T={t}: UNSAT but max_abs {}", spec.name(), exact.max_abs));
                        }
                    }
                    Verdict::Violates(x) => {
                        if truth {
                            disagreements.push(format!("{} T={t}: SAT but max_abs {}", spec.name(), exact.max_abs));
                        }
                        let e = bits_to_int(&g.evaluate(&x).unwrap()).abs_diff(bits_to_int(&c.evaluate(&x).unwrap()));
                        if e <= t.abs_bound() {
                            bad_witnesses += 1;
                        }
                    }
                    Verdict::Unknown => disagreements.push(format!("{} T={t}: unlimited run undecided", spec.name())),
                }
            }
        }
    }
    let ok = disagreements.is_empty() && bad_witnesses == 0 && mutants_per_family >= 1000;
    report(
        4,
        pass_fail(ok),
        &format!(
            "{checks} checks ({mutants_per_family} mutants x 6 families x 4 bounds, {within} within bound): {} disagreements, {bad_witnesses} bad witnesses",
            disagreements.len()
        ),
    );
    assert!(disagreements.is_empty(), "{disagreements:?}");
    assert_eq!(bad_witnesses, 0);
}

#[test]
fn criterion_05_algorithm1_traces() {
    let params = StrategyParams {
        period: 100,
        delta: 0.25,
        tau_dec: 4,
        tau_inc: 2,
        tau_res: 10,
        min_limit: 500,
        max_limit: 15000,
    };
    let strategy = Strategy::Adaptive { name: "trace".into(), params };
    let limits_after = |start: f64, improvements: &[bool]| {
        let mut s = strategy.initial_state();
        s.limit = start;
        for &i in improvements {
            s = strategy.step(s, i);
        }
        s.limit
    };
    let idle = vec![false; 100];
    let mut five = vec![false; 100];
    for i in [3, 20, 40, 60, 80] {
        five[i] = true;
    }
    let mut three = vec![false; 100];
    for i in [10, 50, 90] {
        three[i] = true;
    }
    let burst = vec![true; 11];
    let mut checks = vec![
        ("increase", limits_after(1000.0, &idle), 1250.0),
        ("periodic decrease", limits_after(1000.0, &five), 750.0),
        ("hold", limits_after(1000.0, &three), 1000.0),
        ("immediate decrease", limits_after(1000.0, &burst), 750.0),
        ("clamp high", limits_after(14000.0, &idle), 15000.0),
        ("clamp low", limits_after(600.0, &five), 500.0),
    ];
    // the burst resets the period counter: 99 idle generations later nothing
    // has happened yet, the 100th triggers the increase
    let mut after_burst = burst.clone();
    after_burst.extend(vec![false; 99]);
    checks.push(("reset by immediate decrease", limits_after(1000.0, &after_burst), 750.0));
    after_burst.push(false);
    checks.push(("period restarts", limits_after(1000.0, &after_burst), 937.5));

    let presets = [
        ("ada1", 4, 2, 10, 1000),
        ("ada2", 2, 1, 5, 15000),
        ("ada3", 4, 4, 8, 3000),
        ("ada4", 1, 1, 3, 5000),
        ("ada5", 5, 4, 8, 5000),
    ];
    let presets_ok = presets.iter().all(|&(name, dec, inc, res, period)| {
        let Ok(Strategy::Adaptive { params: p, .. }) = name.parse::<Strategy>() else { return false };
        (p.tau_dec, p.tau_inc, p.tau_res, p.period, p.min_limit, p.max_limit) == (dec, inc, res, period, 500, 15000)
            && p.delta == 0.25
    });
    let failed: Vec<String> =
        checks.iter().filter(|c| c.1 != c.2).map(|c| format!("{} gave {} not {}", c.0, c.1, c.2)).collect();
    let ok = failed.is_empty() && presets_ok;
    report(
        5,
        pass_fail(ok),
        &format!(
            "{}/{} traces exact, presets ada1-ada5 {}",
            checks.len() - failed.len(),
            checks.len(),
            if presets_ok { "match" } else { "differ" }
        ),
    );
    assert!(failed.is_empty(), "{failed:?}");
    assert!(presets_ok);
}

#[test]
fn criterion_06_budget_behaviour() {
    let start = Instant::now();
    let g = generate(&GoldenSpec::multiplier(12)).unwrap();
    let t = Threshold::parse("1%", g.num_outputs()).unwrap();
    let chromosome = encode(&g, g.gates().len()).unwrap();
    let heavy = MutationPolicy::fixed(60);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    // first heavily mutated candidate that needs the solver to do real work
    let mut found = None;
    for attempt in 0..200 {
        let mut c = chromosome.clone();
        for _ in 0..10 {
            c = c.mutate(&heavy, &mut rng);
        }
        let c = c.decode().unwrap();
        let (at_one, _) = check_wcae(&g, &c, &t, &Budget::per_variable(1)).unwrap();
        if at_one != Verdict::Unknown {
            continue;
        }
        let (at_50k, stats) = check_wcae(&g, &c, &t, &Budget::per_variable(50_000)).unwrap();
        found = Some((attempt, at_50k, stats.conflicts));
        break;
    }
    let (attempt, verdict, conflicts) = found.expect("no candidate needed more than one conflict");
    let resolved = matches!(verdict, Verdict::Violates(_));

    // monotonicity: once decided, larger limits give the same answer
    let small = generate(&GoldenSpec::multiplier(6)).unwrap();
    let chromosome = encode(&small, small.gates().len()).unwrap();
    let light = MutationPolicy::fixed(4);
    let limits = [1u64, 2, 5, 20, 100, 1000, 10_000];
    let bounds = ["0", "0.1%", "1%", "10%"];
    let mut violations = Vec::new();
    let mut undecided_somewhere = 0;
    for i in 0..100 {
        let c = chromosome.mutate(&light, &mut rng).decode().unwrap();
        let t = Threshold::parse(bounds[i % 4], small.num_outputs()).unwrap();
        let answers: Vec<&str> = limits
            .iter()
            .map(|&l| Budget::per_variable(l))
            .chain([Budget::unlimited()])
            .map(|b| check_wcae(&small, &c, &t, &b).unwrap().0.label())
            .collect();
        if answers.contains(&"UNDECIDED") {
            undecided_somewhere += 1;
        }
        let first = answers.iter().position(|a| *a != "UNDECIDED");
        let ok = match first {
            Some(k) => answers[k..].iter().all(|a| *a == answers[k]),
            None => false,
        };
        if !ok {
            violations.push(format!("instance {i}: {answers:?}"));
        }
    }
    let ok = resolved && violations.is_empty();
    report(
        6,
        pass_fail(ok),
        &format!(
            "multiplier12 mutant #{attempt}: UNDECIDED at limit 1, {} at 50000 after {conflicts} conflicts; \
             monotone on {}/100 instances ({undecided_somewhere} undecided at some limit); {:.1}s",
            verdict.label(),
            100 - violations.len(),
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(resolved, "50000 did not resolve: {}", verdict.label());
    assert!(violations.is_empty(), "{violations:?}");
}

#[test]
#[ignore = "runs 10 minutes per seed"]
fn criterion_07_end_to_end_guarantee() {
    let seconds: f64 = env_or("ACCEPTANCE_SECONDS", 600.0);
    let seeds: u64 = env_or("ACCEPTANCE_SEEDS", 5);
    let g = generate(&GoldenSpec::multiplier(8)).unwrap();
    let t = Threshold::parse("1%", g.num_outputs()).unwrap();
    let oracle = Oracle::default();
    let mut hard_ok = true;
    let mut rel = Vec::new();
    for seed in 0..seeds {
        let cfg =
            SearchConfig::new(t, "ada4".parse().unwrap(), Termination::time(Duration::from_secs_f64(seconds)), seed);
        let result = run(&g, &cfg, std::io::sink()).unwrap();
        let r = oracle.errors(&g, &result.best, None).unwrap();
        let within = r.wcae <= Ratio::new(1, 100);
        hard_ok &= within;
        rel.push(result.relative_size_pct());
        let line = format!(
            "  seed {seed}: wcae {:.5} ({}), relative size {:.2}%, {} generations\n",
            *r.wcae.numer() as f64 / *r.wcae.denom() as f64,
            if within { "within 1%" } else { "VIOLATES 1%" },
            result.relative_size_pct(),
            result.generations
        );
        std::io::stdout().write_all(line.as_bytes()).unwrap();
    }
    let worst = rel.iter().copied().fold(0.0, f64::max);
    let soft = if worst <= 50.0 {
        "PASS"
    } else if worst <= 70.0 {
        "FLAG"
    } else {
        "FAIL"
    };
    let scale = if seconds < 600.0 || seeds < 5 { " (reduced scale)" } else { "" };
    let verdict = if !hard_ok { "FAIL" } else { soft };
    report(
        7,
        verdict,
        &format!(
            "{seeds} seeds x {seconds}s{scale}: exact WCAE <= 1% {}, worst relative size {worst:.2}% (soft target <= 50%: {soft})",
            if hard_ok { "on every seed" } else { "VIOLATED" }
        ),
    );
    assert!(hard_ok, "a returned circuit violates the bound");
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    v.sort_by(f64::total_cmp);
    v.get((v.len().max(1) - 1) / 2).copied()
}

/// Checks the idle-window property on one log: every stretch of at least
/// `2 * period` generations without improvement has a limit that no longer
/// decreases once one full period of the stretch has passed (the first
/// boundary may still act on improvements made before the stretch), and
/// that stays at `max_limit` once it is reached. Returns (windows, failures).
fn idle_windows(events: &[Event], period: u64, max_limit: u64) -> (usize, Vec<String>) {
    let mut windows = 0;
    let mut failures = Vec::new();
    let improvements: Vec<u64> = events.iter().filter(|e| e.improvement).map(|e| e.generation).collect();
    let last = events.last().map(|e| e.generation).unwrap_or(0);
    let mut starts = vec![0u64];
    starts.extend(&improvements);
    let mut ends = improvements.clone();
    ends.push(last + 1);
    for (&s, &e) in starts.iter().zip(&ends) {
        // idle generations are s+1 ..= e-1
        if e.saturating_sub(s + 1) < 2 * period {
            continue;
        }
        windows += 1;
        let tail: Vec<&Event> = events.iter().filter(|ev| ev.generation > s + period && ev.generation < e).collect();
        for pair in tail.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b.limit < a.limit || (a.limit == max_limit && b.limit != max_limit) {
                failures.push(format!("generation {}: {} -> {}", b.generation, a.limit, b.limit));
            }
        }
    }
    (windows, failures)
}

#[test]
fn criterion_10_idle_limit_trace_small() {
    // an exact bound: after the redundant gates are gone improvements stop
    let g = generate(&GoldenSpec::multiplier(4)).unwrap();
    let t = Threshold::parse("0", g.num_outputs()).unwrap();
    let mut windows = 0;
    let mut failures = Vec::new();
    for (name, seed) in [("ada1", 1u64), ("ada3", 2), ("ada4", 3)] {
        let strategy: Strategy = name.parse().unwrap();
        let params = *strategy.params().unwrap();
        let mut cfg = SearchConfig::new(t, strategy, Termination::generations(6 * params.period), seed);
        cfg.record_time = false;
        let mut log = Vec::new();
        run(&g, &cfg, &mut log).unwrap();
        let events = read_events(&log[..]).unwrap();
        let (w, f) = idle_windows(&events, params.period, params.max_limit);
        windows += w;
        failures.extend(f.into_iter().map(|f| format!("{name}: {f}")));
    }
    report(
        10,
        pass_fail(windows > 0 && failures.is_empty()),
        &format!(
            "generation-bounded runs: {windows} idle windows of >= 2 periods, {} limit decreases inside",
            failures.len()
        ),
    );
    assert!(windows > 0);
    assert!(failures.is_empty(), "{failures:?}");
}

#[test]
fn criterion_09_determinism() {
    let g = generate(&GoldenSpec::multiplier(5)).unwrap();
    let t = Threshold::parse("1%", g.num_outputs()).unwrap();
    let mut cfg = SearchConfig::new(t, "ada4".parse().unwrap(), Termination::generations(4000), 2024);
    cfg.record_time = false;
    let mut a = Vec::new();
    let mut b = Vec::new();
    let ra = run(&g, &cfg, &mut a).unwrap();
    let rb = run(&g, &cfg, &mut b).unwrap();
    let ok = a == b && ra.best == rb.best && !a.is_empty();
    report(9, pass_fail(ok), &format!("two executions, {} log bytes each, byte-identical: {}", a.len(), a == b));
    assert!(ok);
}

fn strategy_trend_campaign(out: &Path, seconds: f64, replications: usize) -> Campaign {
    Campaign {
        output_dir: out.to_path_buf(),
        log: Some("sparse".into()),
        experiments: vec![Experiment {
            family: vdsynth::genlib::Family::Multiplier,
            width: 10,
            divisor_width: None,
            wcae: "0.1%".into(),
            strategies: ["lim100", "lim2K", "lim10K", "lim20K", "lim50K", "ada4"].map(String::from).to_vec(),
            time_limit: Some(seconds),
            generations: None,
            replications,
            base_seed: 0,
            lambda: 1,
            mutation_freq: 0.5,
        }],
    }
}

#[test]
#[ignore = "runs about 11 hours on one core"]
fn criterion_08_strategy_trend() {
    let seconds: f64 = env_or("ACCEPTANCE_SECONDS", 600.0);
    let replications: usize = env_or("ACCEPTANCE_REPLICATIONS", 11);
    let dir = std::env::var("ACCEPTANCE_DIR").map(std::path::PathBuf::from).unwrap_or_else(|_| {
        let d = std::env::temp_dir().join("vdsynth-acceptance-c8");
        std::fs::create_dir_all(&d).unwrap();
        d
    });
    let campaign = strategy_trend_campaign(&dir, seconds, replications);
    run_campaign(&campaign, 0).unwrap();
    let records = load_records(&dir).unwrap();
    let sizes = |s: &str| -> Vec<f64> {
        records.iter().filter(|r: &&RunRecord| r.strategy == s && r.status == "ok").map(|r| r.final_size).collect()
    };
    let m = |s: &str| median(sizes(s)).unwrap_or(f64::INFINITY);
    let fixed = ["lim100", "lim2K", "lim10K", "lim20K", "lim50K"];
    let best_fixed = fixed.iter().map(|s| m(s)).fold(f64::INFINITY, f64::min);
    let (lim100, lim20k, ada4) = (m("lim100"), m("lim20K"), m("ada4"));
    let trend = lim100 < lim20k && ada4 < lim20k;
    let versatile = ada4 <= 1.10 * best_fixed;
    let scale = if seconds < 600.0 || replications < 11 { " (reduced scale)" } else { "" };
    report(
        8,
        pass_fail(trend && versatile),
        &format!(
            "R={replications}, {seconds}s{scale}: median um2 lim100 {lim100:.2}, lim20K {lim20k:.2}, ada4 {ada4:.2}, best fixed {best_fixed:.2}; \
             lim100 and ada4 below lim20K: {trend}; ada4 within 10% of best fixed: {versatile}"
        ),
    );

    // criterion 10 on the adaptive runs of the same campaign
    let params = *"ada4".parse::<Strategy>().unwrap().params().unwrap();
    let mut windows = 0;
    let mut failures = Vec::new();
    for r in records.iter().filter(|r| r.strategy == "ada4" && r.status == "ok") {
        let events = read_events(std::fs::File::open(dir.join(&r.log)).unwrap()).unwrap();
        let (w, f) = idle_windows(&events, params.period, params.max_limit);
        windows += w;
        failures.extend(f);
    }
    report(
        10,
        pass_fail(failures.is_empty()),
        &format!("criterion 8 logs: {windows} idle windows of >= 2 periods, {} limit decreases inside", failures.len()),
    );
    assert!(failures.is_empty(), "{failures:?}");
}
