//! Gate-level combinational netlists.
//!
//! Signals are numbered the way CGP numbers them: primary inputs occupy
//! `0..n`, gate `k` drives signal `n + k`. Gates are stored in topological
//! order, so every gate only reads inputs or earlier gates.
//!
//! Integer encodings of input and output vectors are little-endian: bit 0 of
//! the integer is signal `0` (resp. output `0`).

mod builder;
mod text;

use std::fmt;

use crate::error::{Error, Result};

pub use builder::NetlistBuilder;

/// Gate functions. Every function has at most two inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateFunc {
    Inv,
    And,
    Or,
    Xor,
    Nand,
    Nor,
    Xnor,
    Buf,
    Const0,
    Const1,
}

/// Gate sizes in µm² for the 45nm library the size model is calibrated on.
pub const GATE_AREAS_UM2: [(GateFunc, f64); 7] = [
    (GateFunc::Inv, 1.40),
    (GateFunc::And, 2.34),
    (GateFunc::Or, 2.34),
    (GateFunc::Xor, 4.69),
    (GateFunc::Nand, 1.87),
    (GateFunc::Nor, 2.34),
    (GateFunc::Xnor, 4.69),
];

impl GateFunc {
    pub const ALL: [GateFunc; 10] = [
        GateFunc::Inv,
        GateFunc::And,
        GateFunc::Or,
        GateFunc::Xor,
        GateFunc::Nand,
        GateFunc::Nor,
        GateFunc::Xnor,
        GateFunc::Buf,
        GateFunc::Const0,
        GateFunc::Const1,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateFunc::Const0 | GateFunc::Const1 => 0,
            GateFunc::Inv | GateFunc::Buf => 1,
            _ => 2,
        }
    }

    /// Area in hundredths of µm². BUF and constants are free.
    pub fn area(self) -> Area {
        let hundredths = match self {
            GateFunc::Inv => 140,
            GateFunc::And | GateFunc::Or | GateFunc::Nor => 234,
            GateFunc::Xor | GateFunc::Xnor => 469,
            GateFunc::Nand => 187,
            GateFunc::Buf | GateFunc::Const0 | GateFunc::Const1 => 0,
        };
        Area::from_hundredths(hundredths)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateFunc::Inv => "INV",
            GateFunc::And => "AND",
            GateFunc::Or => "OR",
            GateFunc::Xor => "XOR",
            GateFunc::Nand => "NAND",
            GateFunc::Nor => "NOR",
            GateFunc::Xnor => "XNOR",
            GateFunc::Buf => "BUF",
            GateFunc::Const0 => "CONST0",
            GateFunc::Const1 => "CONST1",
        }
    }

    pub fn from_name(name: &str) -> Option<GateFunc> {
        GateFunc::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Bitwise evaluation over 64 lanes. Unary functions ignore `b`.
    #[inline]
    pub fn eval_word(self, a: u64, b: u64) -> u64 {
        match self {
            GateFunc::Inv => !a,
            GateFunc::And => a & b,
            GateFunc::Or => a | b,
            GateFunc::Xor => a ^ b,
            GateFunc::Nand => !(a & b),
            GateFunc::Nor => !(a | b),
            GateFunc::Xnor => !(a ^ b),
            GateFunc::Buf => a,
            GateFunc::Const0 => 0,
            GateFunc::Const1 => !0,
        }
    }

    #[inline]
    pub fn eval(self, a: bool, b: bool) -> bool {
        self.eval_word(a as u64, b as u64) & 1 == 1
    }

    pub fn is_xor_like(self) -> bool {
        matches!(self, GateFunc::Xor | GateFunc::Xnor)
    }
}

impl fmt::Display for GateFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Circuit area, kept as an exact integer count of hundredths of µm² so that
/// size comparisons never suffer from floating-point drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Area(u64);

impl Area {
    pub const ZERO: Area = Area(0);

    pub const fn from_hundredths(h: u64) -> Area {
        Area(h)
    }

    pub fn hundredths(self) -> u64 {
        self.0
    }

    pub fn um2(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl std::ops::Add for Area {
    type Output = Area;
    fn add(self, rhs: Area) -> Area {
        Area(self.0 + rhs.0)
    }
}

impl std::ops::AddAssign for Area {
    fn add_assign(&mut self, rhs: Area) {
        self.0 += rhs.0;
    }
}

impl std::iter::Sum for Area {
    fn sum<I: Iterator<Item = Area>>(iter: I) -> Area {
        iter.fold(Area::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Area {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

/// A single gate. `inputs` are signal indices; unused slots repeat the first
/// input (or are zero for constants).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gate {
    pub func: GateFunc,
    pub inputs: [u32; 2],
}

impl Gate {
    pub fn new(func: GateFunc, a: u32, b: u32) -> Gate {
        let inputs = match func.arity() {
            0 => [0, 0],
            1 => [a, a],
            _ => [a, b],
        };
        Gate { func, inputs }
    }

    /// The inputs the function actually reads.
    pub fn fanin(&self) -> &[u32] {
        &self.inputs[..self.func.arity()]
    }
}

/// Immutable combinational netlist.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Netlist {
    name: String,
    num_inputs: usize,
    gates: Vec<Gate>,
    outputs: Vec<u32>,
}

impl Netlist {
    /// Builds a netlist, checking interface widths and topological order.
    pub fn new(name: impl Into<String>, num_inputs: usize, gates: Vec<Gate>, outputs: Vec<u32>) -> Result<Netlist> {
        let name = name.into();
        if num_inputs == 0 {
            return Err(Error::InvalidNetlist("a circuit needs at least one input".into()));
        }
        if outputs.is_empty() {
            return Err(Error::InvalidNetlist("a circuit needs at least one output".into()));
        }
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidNetlist(format!("invalid circuit name {name:?}")));
        }
        for (k, gate) in gates.iter().enumerate() {
            let limit = (num_inputs + k) as u32;
            if let Some(&bad) = gate.fanin().iter().find(|&&s| s >= limit) {
                return Err(Error::InvalidNetlist(format!(
                    "gate {k} reads signal {bad}, which is not an input or an earlier gate"
                )));
            }
        }
        let total = (num_inputs + gates.len()) as u32;
        if let Some(&bad) = outputs.iter().find(|&&s| s >= total) {
            return Err(Error::InvalidNetlist(format!("output refers to undefined signal {bad}")));
        }
        let gates = gates.into_iter().map(|g| Gate::new(g.func, g.inputs[0], g.inputs[1])).collect();
        Ok(Netlist { name, num_inputs, gates, outputs })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Result<Netlist> {
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidNetlist(format!("invalid circuit name {name:?}")));
        }
        self.name = name;
        Ok(self)
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn outputs(&self) -> &[u32] {
        &self.outputs
    }

    pub fn num_signals(&self) -> usize {
        self.num_inputs + self.gates.len()
    }

    /// Marks gates that lie on a path to some output.
    pub fn active_gates(&self) -> Vec<bool> {
        let n = self.num_inputs;
        let mut active = vec![false; self.gates.len()];
        for &o in &self.outputs {
            if o as usize >= n {
                active[o as usize - n] = true;
            }
        }
        for k in (0..self.gates.len()).rev() {
            if !active[k] {
                continue;
            }
            for &s in self.gates[k].fanin() {
                if s as usize >= n {
                    active[s as usize - n] = true;
                }
            }
        }
        active
    }

    /// Sum of gate areas over the active cone.
    pub fn size(&self) -> Area {
        self.active_gates().iter().zip(&self.gates).filter(|(a, _)| **a).map(|(_, g)| g.func.area()).sum()
    }

    /// Drops gates outside the active cone and renumbers the rest.
    pub fn sweep(&self) -> Netlist {
        let n = self.num_inputs as u32;
        let active = self.active_gates();
        let mut remap: Vec<u32> = (0..n).collect();
        let mut gates = Vec::new();
        for (k, gate) in self.gates.iter().enumerate() {
            if active[k] {
                let a = remap[gate.inputs[0] as usize];
                let b = remap[gate.inputs[1] as usize];
                remap.push(n + gates.len() as u32);
                gates.push(Gate::new(gate.func, a, b));
            } else {
                remap.push(u32::MAX);
            }
        }
        let outputs = self.outputs.iter().map(|&o| remap[o as usize]).collect();
        Netlist { name: self.name.clone(), num_inputs: self.num_inputs, gates, outputs }
    }

    /// Evaluates a single input assignment. Bit `j` of `x` is primary input `j`.
    pub fn evaluate(&self, x: &[bool]) -> Result<Vec<bool>> {
        if x.len() != self.num_inputs {
            return Err(Error::InputArity { expected: self.num_inputs, got: x.len() });
        }
        let lanes: Vec<u64> = x.iter().map(|&b| if b { !0 } else { 0 }).collect();
        let out = self.evaluate_batch(&lanes)?;
        Ok(out.iter().map(|w| w & 1 == 1).collect())
    }

    /// Evaluates 64 assignments at once; `inputs[j]` holds input `j` for every
    /// lane, and the result holds one word per output.
    pub fn evaluate_batch(&self, inputs: &[u64]) -> Result<Vec<u64>> {
        if inputs.len() != self.num_inputs {
            return Err(Error::InputArity { expected: self.num_inputs, got: inputs.len() });
        }
        let mut scratch = Vec::with_capacity(self.num_signals());
        Ok(self.simulate(inputs, &mut scratch))
    }

    /// Batch evaluation with caller-owned scratch; `inputs.len()` must equal
    /// the input count.
    pub(crate) fn simulate(&self, inputs: &[u64], values: &mut Vec<u64>) -> Vec<u64> {
        values.clear();
        values.extend_from_slice(inputs);
        for gate in &self.gates {
            let a = values[gate.inputs[0] as usize];
            let b = values[gate.inputs[1] as usize];
            values.push(gate.func.eval_word(a, b));
        }
        self.outputs.iter().map(|&o| values[o as usize]).collect()
    }

    /// Integer-level evaluation for circuits with at most 128 inputs/outputs.
    pub fn eval_int(&self, x: u128) -> Result<u128> {
        if self.num_inputs > 128 || self.outputs.len() > 128 {
            return Err(Error::InvalidNetlist("integer evaluation supports at most 128 bits".into()));
        }
        if self.num_inputs < 128 && x >> self.num_inputs != 0 {
            return Err(Error::InputArity { expected: self.num_inputs, got: 128 - x.leading_zeros() as usize });
        }
        let lanes: Vec<u64> = (0..self.num_inputs).map(|j| if (x >> j) & 1 == 1 { !0 } else { 0 }).collect();
        let mut scratch = Vec::with_capacity(self.num_signals());
        let out = self.simulate(&lanes, &mut scratch);
        Ok(out.iter().enumerate().fold(0u128, |acc, (i, w)| acc | (((w & 1) as u128) << i)))
    }

    /// Copy of the circuit with output `bit` tied to a constant.
    pub fn with_output_stuck(&self, bit: usize, value: bool) -> Result<Netlist> {
        if bit >= self.outputs.len() {
            return Err(Error::InvalidNetlist(format!("no output {bit}")));
        }
        let mut gates = self.gates.clone();
        let func = if value { GateFunc::Const1 } else { GateFunc::Const0 };
        gates.push(Gate::new(func, 0, 0));
        let mut outputs = self.outputs.clone();
        outputs[bit] = (self.num_signals()) as u32;
        Netlist::new(format!("{}_stuck{bit}", self.name), self.num_inputs, gates, outputs)
    }

    /// Parses the line-oriented text format.
    pub fn parse(text: &str) -> Result<Netlist> {
        text::parse(text)
    }

    /// Renders the line-oriented text format.
    pub fn to_text(&self) -> String {
        text::serialize(self)
    }
}

impl std::str::FromStr for Netlist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Netlist> {
        Netlist::parse(s)
    }
}

/// Splits an integer into `width` little-endian bits.
pub fn int_to_bits(value: u128, width: usize) -> Vec<bool> {
    (0..width).map(|i| i < 128 && (value >> i) & 1 == 1).collect()
}

/// Packs little-endian bits into an integer (at most 128 bits).
pub fn bits_to_int(bits: &[bool]) -> u128 {
    bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u128) << i))
}
