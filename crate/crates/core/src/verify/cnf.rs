//! Tseitin encoding of netlists into CNF.
//!
//! Variables are 1-based as in DIMACS: primary input `j` is variable `j + 1`,
//! gate `k` is variable `n + k + 1`.

use std::io::{self, Write};

use super::miter::Miter;
use crate::netlist::{GateFunc, Netlist};

/// Clause set with DIMACS-style signed literals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<i32>>,
}

impl Cnf {
    pub fn write_dimacs<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "p cnf {} {}", self.num_vars, self.clauses.len())?;
        for c in &self.clauses {
            for l in c {
                write!(out, "{l} ")?;
            }
            writeln!(out, "0")?;
        }
        Ok(())
    }

    pub fn to_dimacs(&self) -> String {
        let mut buf = Vec::new();
        self.write_dimacs(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    /// True if `model` (indexed by variable - 1) satisfies every clause.
    pub fn satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&l| model[l.unsigned_abs() as usize - 1] == (l > 0)))
    }
}

/// CNF plus the variables carrying the primary inputs.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub cnf: Cnf,
    pub input_vars: Vec<u32>,
}

impl Encoding {
    /// Projects a model (indexed by variable - 1) onto the primary inputs.
    pub fn project_inputs(&self, model: &[bool]) -> Vec<bool> {
        self.input_vars.iter().map(|&v| model[v as usize - 1]).collect()
    }
}

fn gate_clauses(func: GateFunc, out: i32, a: i32, b: i32, clauses: &mut Vec<Vec<i32>>) {
    match func {
        GateFunc::Const0 => clauses.push(vec![-out]),
        GateFunc::Const1 => clauses.push(vec![out]),
        GateFunc::Buf => {
            clauses.push(vec![-out, a]);
            clauses.push(vec![out, -a]);
        }
        GateFunc::Inv => {
            clauses.push(vec![-out, -a]);
            clauses.push(vec![out, a]);
        }
        GateFunc::And | GateFunc::Nand => {
            let o = if func == GateFunc::And { out } else { -out };
            clauses.push(vec![-o, a]);
            clauses.push(vec![-o, b]);
            clauses.push(vec![o, -a, -b]);
        }
        GateFunc::Or | GateFunc::Nor => {
            let o = if func == GateFunc::Or { out } else { -out };
            clauses.push(vec![o, -a]);
            clauses.push(vec![o, -b]);
            clauses.push(vec![-o, a, b]);
        }
        GateFunc::Xor | GateFunc::Xnor => {
            let o = if func == GateFunc::Xor { out } else { -out };
            clauses.push(vec![-o, a, b]);
            clauses.push(vec![-o, -a, -b]);
            clauses.push(vec![o, -a, b]);
            clauses.push(vec![o, a, -b]);
        }
    }
}

/// Tseitin clauses for every gate of `c`, plus unit clauses forcing each
/// output listed in `asserted` to the given value.
pub fn encode_netlist(c: &Netlist, asserted: &[(usize, bool)]) -> Encoding {
    let n = c.num_inputs();
    let var = |s: u32| s as i32 + 1;
    let mut clauses = Vec::with_capacity(3 * c.gates().len() + asserted.len());
    for (k, g) in c.gates().iter().enumerate() {
        let out = (n + k) as i32 + 1;
        gate_clauses(g.func, out, var(g.inputs[0]), var(g.inputs[1]), &mut clauses);
    }
    for &(o, value) in asserted {
        let v = var(c.outputs()[o]);
        clauses.push(vec![if value { v } else { -v }]);
    }
    Encoding { cnf: Cnf { num_vars: c.num_signals() as u32, clauses }, input_vars: (1..=n as u32).collect() }
}

/// Encodes the miter with its output asserted to 1: satisfiable exactly when
/// some input violates the error bound.
pub fn encode_cnf(miter: &Miter) -> Encoding {
    encode_netlist(miter.netlist(), &[(0, true)])
}
