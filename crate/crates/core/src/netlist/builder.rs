use std::collections::HashMap;

use super::{Gate, GateFunc, Netlist};
use crate::error::Result;

/// Incremental netlist construction with structural hashing and constant
/// folding. Adding a gate that already exists (up to input order) returns the
/// existing signal; gates with constant or repeated inputs collapse to
/// simpler signals. BUF gates are never emitted.
#[derive(Debug, Clone)]
pub struct NetlistBuilder {
    num_inputs: usize,
    gates: Vec<Gate>,
    table: HashMap<Gate, u32>,
    inverse: HashMap<u32, u32>,
    const0: Option<u32>,
    const1: Option<u32>,
}

enum Unary {
    Zero,
    One,
    Ident,
    Not,
}

fn unary_of(f0: bool, f1: bool) -> Unary {
    match (f0, f1) {
        (false, false) => Unary::Zero,
        (true, true) => Unary::One,
        (false, true) => Unary::Ident,
        (true, false) => Unary::Not,
    }
}

impl NetlistBuilder {
    pub fn new(num_inputs: usize) -> NetlistBuilder {
        NetlistBuilder {
            num_inputs,
            gates: Vec::new(),
            table: HashMap::new(),
            inverse: HashMap::new(),
            const0: None,
            const1: None,
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn input(&self, j: usize) -> u32 {
        assert!(j < self.num_inputs, "input {j} out of range");
        j as u32
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    fn constant_value(&self, s: u32) -> Option<bool> {
        if Some(s) == self.const0 {
            Some(false)
        } else if Some(s) == self.const1 {
            Some(true)
        } else {
            None
        }
    }

    fn push(&mut self, gate: Gate) -> u32 {
        if let Some(&s) = self.table.get(&gate) {
            return s;
        }
        let s = (self.num_inputs + self.gates.len()) as u32;
        self.gates.push(gate);
        self.table.insert(gate, s);
        s
    }

    pub fn constant(&mut self, value: bool) -> u32 {
        if value {
            if let Some(s) = self.const1 {
                return s;
            }
            let s = self.push(Gate::new(GateFunc::Const1, 0, 0));
            self.const1 = Some(s);
            s
        } else {
            if let Some(s) = self.const0 {
                return s;
            }
            let s = self.push(Gate::new(GateFunc::Const0, 0, 0));
            self.const0 = Some(s);
            s
        }
    }

    pub fn not(&mut self, a: u32) -> u32 {
        if let Some(v) = self.constant_value(a) {
            return self.constant(!v);
        }
        if let Some(&inv) = self.inverse.get(&a) {
            return inv;
        }
        let s = self.push(Gate::new(GateFunc::Inv, a, a));
        self.inverse.insert(a, s);
        self.inverse.insert(s, a);
        s
    }

    fn apply_unary(&mut self, u: Unary, x: u32) -> u32 {
        match u {
            Unary::Zero => self.constant(false),
            Unary::One => self.constant(true),
            Unary::Ident => x,
            Unary::Not => self.not(x),
        }
    }

    /// Adds `func(a, b)`, folding constants and trivial cases.
    pub fn gate(&mut self, func: GateFunc, a: u32, b: u32) -> u32 {
        match func {
            GateFunc::Const0 => return self.constant(false),
            GateFunc::Const1 => return self.constant(true),
            GateFunc::Buf => return a,
            GateFunc::Inv => return self.not(a),
            _ => {}
        }
        let f = |x: bool, y: bool| func.eval(x, y);
        match (self.constant_value(a), self.constant_value(b)) {
            (Some(x), Some(y)) => return self.constant(f(x, y)),
            (Some(x), None) => return self.apply_unary(unary_of(f(x, false), f(x, true)), b),
            (None, Some(y)) => return self.apply_unary(unary_of(f(false, y), f(true, y)), a),
            (None, None) => {}
        }
        if a == b {
            return self.apply_unary(unary_of(f(false, false), f(true, true)), a);
        }
        if self.inverse.get(&a) == Some(&b) {
            // f(x, !x) for x = a
            return self.apply_unary(unary_of(f(false, true), f(true, false)), a);
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.push(Gate::new(func, lo, hi))
    }

    pub fn and(&mut self, a: u32, b: u32) -> u32 {
        self.gate(GateFunc::And, a, b)
    }

    pub fn or(&mut self, a: u32, b: u32) -> u32 {
        self.gate(GateFunc::Or, a, b)
    }

    pub fn xor(&mut self, a: u32, b: u32) -> u32 {
        self.gate(GateFunc::Xor, a, b)
    }

    pub fn xnor(&mut self, a: u32, b: u32) -> u32 {
        self.gate(GateFunc::Xnor, a, b)
    }

    /// `sel ? t : e`
    pub fn mux(&mut self, sel: u32, t: u32, e: u32) -> u32 {
        if t == e {
            return t;
        }
        let nsel = self.not(sel);
        let x = self.and(sel, t);
        let y = self.and(nsel, e);
        self.or(x, y)
    }

    /// Full adder, returns `(sum, carry)`.
    pub fn full_add(&mut self, a: u32, b: u32, c: u32) -> (u32, u32) {
        let p = self.xor(a, b);
        let sum = self.xor(p, c);
        let g = self.and(a, b);
        let t = self.and(p, c);
        let carry = self.or(g, t);
        (sum, carry)
    }

    /// Imports every gate of `c` with its inputs bound to `inputs`, returning
    /// the signals driving `c`'s outputs.
    pub fn instantiate(&mut self, c: &Netlist, inputs: &[u32]) -> Vec<u32> {
        assert_eq!(inputs.len(), c.num_inputs(), "instantiate: input count mismatch");
        let mut map: Vec<u32> = inputs.to_vec();
        for g in c.gates() {
            let a = map[g.inputs[0] as usize];
            let b = map[g.inputs[1] as usize];
            map.push(self.gate(g.func, a, b));
        }
        c.outputs().iter().map(|&o| map[o as usize]).collect()
    }

    /// Finishes the netlist and drops gates that do not reach an output.
    pub fn finish(self, name: &str, outputs: Vec<u32>) -> Result<Netlist> {
        Ok(Netlist::new(name, self.num_inputs, self.gates, outputs)?.sweep())
    }
}
