//! Formal check of the worst-case absolute error bound.
//!
//! A candidate is accepted when the miter CNF is unsatisfiable within the
//! conflict budget. Satisfying assignments are re-simulated on both circuits
//! before they are reported as counterexamples.

pub mod cnf;
pub mod miter;
pub mod refute;
pub mod sat;

use std::fmt;

pub use cnf::{encode_cnf, encode_netlist, Cnf, Encoding};
pub use miter::{
    build_miter, build_miter_with, check_interfaces, output_range, parse_fraction, Miter, MiterStyle, Threshold,
};
pub use refute::Refuter;
pub use sat::{Budget, BudgetMode, Outcome, Solver, SolverStats};

use crate::error::{Error, Result};
use crate::netlist::{bits_to_int, Netlist};

/// Result of a budgeted satisfiability query on a CNF.
#[derive(Debug, Clone)]
pub struct Decision {
    pub outcome: Outcome,
    pub stats: SolverStats,
}

/// Solves `cnf` under `budget`. Models are indexed by variable - 1.
pub fn decide(cnf: &Cnf, budget: &Budget) -> Decision {
    let mut solver = Solver::new(cnf.num_vars as usize);
    let mut consistent = true;
    for c in &cnf.clauses {
        let lits: Vec<_> = c.iter().map(|&l| sat::mk_lit(l.unsigned_abs() - 1, l < 0)).collect();
        if !solver.add_clause(&lits) {
            consistent = false;
            break;
        }
    }
    let outcome = if consistent { solver.solve(budget) } else { Outcome::Unsat };
    if let Outcome::Sat(model) = &outcome {
        debug_assert!(cnf.satisfied_by(model));
    }
    Decision { outcome, stats: solver.stats() }
}

/// Answer of the error-bound check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Proven: no input exceeds the bound.
    WithinBound,
    /// Input assignment (bit `j` is input `j`) on which the bound is exceeded.
    Violates(Vec<bool>),
    /// Budget exhausted.
    Unknown,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::WithinBound => "UNSAT",
            Verdict::Violates(_) => "SAT",
            Verdict::Unknown => "UNDECIDED",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Hexadecimal rendering of an input assignment, input 0 as the least
/// significant bit.
pub fn witness_hex(bits: &[bool]) -> String {
    let mut digits = Vec::with_capacity(bits.len().div_ceil(4));
    for chunk in bits.chunks(4) {
        let v = chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (b as u8) << i);
        digits.push(char::from_digit(v as u32, 16).unwrap());
    }
    if digits.is_empty() {
        digits.push('0');
    }
    let s: String = digits.iter().rev().collect();
    format!("0x{s}")
}

/// Absolute output difference of the two circuits on one input assignment.
pub fn abs_error_at(golden: &Netlist, candidate: &Netlist, bits: &[bool]) -> Result<u128> {
    let g = bits_to_int(&golden.evaluate(bits)?);
    let c = bits_to_int(&candidate.evaluate(bits)?);
    Ok(g.abs_diff(c))
}

/// Checks whether `candidate` stays within `threshold` of `golden` on all
/// inputs, giving up once `budget` is exhausted.
pub fn check_wcae(
    golden: &Netlist,
    candidate: &Netlist,
    threshold: &Threshold,
    budget: &Budget,
) -> Result<(Verdict, SolverStats)> {
    check_wcae_with(golden, candidate, threshold, budget, MiterStyle::Plain)
}

/// [`check_wcae`] with a choice of miter construction.
pub fn check_wcae_with(
    golden: &Netlist,
    candidate: &Netlist,
    threshold: &Threshold,
    budget: &Budget,
    style: MiterStyle,
) -> Result<(Verdict, SolverStats)> {
    let miter = build_miter_with(golden, candidate, threshold, style)?;
    if miter.is_trivially_unsat() {
        return Ok((Verdict::WithinBound, SolverStats::default()));
    }
    let enc = encode_cnf(&miter);
    let d = decide(&enc.cnf, budget);
    let verdict = match d.outcome {
        Outcome::Unsat => Verdict::WithinBound,
        Outcome::Undecided => Verdict::Unknown,
        Outcome::Sat(model) => {
            let x = enc.project_inputs(&model);
            if abs_error_at(golden, candidate, &x)? <= threshold.abs_bound() {
                return Err(Error::UnsoundWitness);
            }
            Verdict::Violates(x)
        }
    };
    Ok((verdict, d.stats))
}
