//! Exact error metrics by exhaustive enumeration of the input space.
//!
//! Inputs are simulated 64 at a time, one assignment per bit lane, and the
//! blocks are spread over the rayon thread pool. The result does not depend
//! on how the blocks are partitioned: the witness is always the smallest
//! input that attains the maximum error.

use num_rational::Ratio;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::netlist::{int_to_bits, Netlist};
use crate::verify::{check_interfaces, check_wcae, output_range, Budget, Threshold, Verdict};

/// Default enumeration ceiling on the number of primary inputs.
pub const DEFAULT_MAX_INPUTS: usize = 24;

/// Widest output bus the oracle accepts; keeps every sum inside `u128`.
const MAX_OUTPUTS: usize = 96;

/// Exact error figures of a candidate against its golden circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorReport {
    /// `max |e| / (2^m - 1)`.
    pub wcae: Ratio<u128>,
    /// Smallest input attaining the maximum error.
    pub wcae_witness: u128,
    /// `mean |e| / (2^m - 1)`.
    pub mae: Ratio<u128>,
    pub max_abs: u128,
    pub sum_abs: u128,
    /// Inputs with `|e| > T_abs`, when a threshold was supplied.
    pub violation_count: Option<u128>,
    pub num_inputs: usize,
}

impl ErrorReport {
    pub fn witness_bits(&self) -> Vec<bool> {
        int_to_bits(self.wcae_witness, self.num_inputs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Partial {
    max_abs: u128,
    witness: u128,
    sum_abs: u128,
    violations: u128,
}

impl Partial {
    fn merge(self, other: Partial) -> Partial {
        let (max_abs, witness) =
            if other.max_abs > self.max_abs || (other.max_abs == self.max_abs && other.witness < self.witness) {
                (other.max_abs, other.witness)
            } else {
                (self.max_abs, self.witness)
            };
        Partial {
            max_abs,
            witness,
            sum_abs: self.sum_abs + other.sum_abs,
            violations: self.violations + other.violations,
        }
    }
}

/// Exhaustive evaluator with a configurable input ceiling.
#[derive(Debug, Clone, Copy)]
pub struct Oracle {
    pub max_inputs: usize,
}

impl Default for Oracle {
    fn default() -> Oracle {
        Oracle { max_inputs: DEFAULT_MAX_INPUTS }
    }
}

// lane l of input j (j < 6) within any 64-block
const LANE_PATTERNS: [u64; 6] = [
    0xaaaa_aaaa_aaaa_aaaa,
    0xcccc_cccc_cccc_cccc,
    0xf0f0_f0f0_f0f0_f0f0,
    0xff00_ff00_ff00_ff00,
    0xffff_0000_ffff_0000,
    0xffff_ffff_0000_0000,
];

fn block_inputs(n: usize, block: u128, words: &mut [u64]) {
    for (j, w) in words.iter_mut().enumerate().take(n) {
        *w = if j < 6 {
            LANE_PATTERNS[j]
        } else if (block >> (j - 6)) & 1 == 1 {
            u64::MAX
        } else {
            0
        };
    }
}

fn lane_value(words: &[u64], lane: u32) -> u128 {
    words.iter().enumerate().fold(0u128, |v, (i, w)| v | (((w >> lane) & 1) as u128) << i)
}

impl Oracle {
    pub fn new(max_inputs: usize) -> Oracle {
        Oracle { max_inputs }
    }

    /// Enumerates every input of `golden` and `candidate`. With `threshold`
    /// given, also counts the inputs whose error exceeds it.
    pub fn errors(&self, golden: &Netlist, candidate: &Netlist, threshold: Option<&Threshold>) -> Result<ErrorReport> {
        check_interfaces(golden, candidate)?;
        let n = golden.num_inputs();
        let m = golden.num_outputs();
        if n > self.max_inputs || n > 64 {
            return Err(Error::InputSpaceTooLarge { inputs: n, limit: self.max_inputs.min(64) });
        }
        if m > MAX_OUTPUTS {
            return Err(Error::Config(format!("oracle supports at most {MAX_OUTPUTS} outputs, got {m}")));
        }
        let bound = threshold.map(|t| t.abs_bound()).unwrap_or(u128::MAX);
        let total = 1u128 << n;
        let lanes = total.min(64) as u32;
        let blocks = total.div_ceil(64) as u64;

        let partial = (0..blocks)
            .into_par_iter()
            .fold(
                || (Partial::default(), vec![0u64; n], Vec::new(), Vec::new()),
                |(acc, mut words, mut gv, mut cv), block| {
                    block_inputs(n, block as u128, &mut words);
                    let go = golden.simulate(&words, &mut gv);
                    let co = candidate.simulate(&words, &mut cv);
                    let mut p = Partial { max_abs: 0, witness: u128::MAX, sum_abs: 0, violations: 0 };
                    for lane in 0..lanes {
                        let e = lane_value(&go, lane).abs_diff(lane_value(&co, lane));
                        let x = (block as u128) << 6 | lane as u128;
                        if e > p.max_abs || p.witness == u128::MAX {
                            p.max_abs = e;
                            p.witness = x;
                        }
                        p.sum_abs += e;
                        p.violations += (e > bound) as u128;
                    }
                    (acc.merge(p), words, gv, cv)
                },
            )
            .map(|(p, ..)| p)
            .reduce(|| Partial { witness: u128::MAX, ..Partial::default() }, Partial::merge);

        let range = output_range(m);
        Ok(ErrorReport {
            wcae: Ratio::new(partial.max_abs, range),
            wcae_witness: partial.witness,
            mae: Ratio::new(partial.sum_abs, total * range),
            max_abs: partial.max_abs,
            sum_abs: partial.sum_abs,
            violation_count: threshold.map(|_| partial.violations),
            num_inputs: n,
        })
    }
}

/// Exact WCAE and MAE with the default input ceiling.
pub fn exact_errors(golden: &Netlist, candidate: &Netlist) -> Result<ErrorReport> {
    Oracle::default().errors(golden, candidate, None)
}

/// Differential check: the oracle's verdict on `WCAE <= t` must match the
/// unlimited-budget formal check.
pub fn agree(golden: &Netlist, candidate: &Netlist, t: &Threshold) -> Result<bool> {
    let report = exact_errors(golden, candidate)?;
    let (verdict, _) = check_wcae(golden, candidate, t, &Budget::unlimited())?;
    // max_abs / R <= p/q  <=>  max_abs <= floor(p R / q) for integer max_abs
    let within = report.max_abs <= t.abs_bound();
    Ok(within == (verdict == Verdict::WithinBound))
}
