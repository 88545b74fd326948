//! Golden (exact) arithmetic circuits over unsigned operands.
//!
//! Input bus layout, least significant bit first:
//!
//! | family       | inputs                          | outputs |
//! |--------------|---------------------------------|---------|
//! | adder(w)     | a[w], b[w], carry-in            | w + 1   |
//! | multiplier(w)| a[w], b[w]                      | 2w      |
//! | mac(w)       | a[w], b[w], acc[2w]             | 2w + 1  |
//! | square(w)    | a[w]                            | 2w      |
//! | divider(d,s) | dividend[d], divisor[s]         | d       |
//!
//! Division by zero yields the all-ones quotient.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{GateFunc, Netlist, NetlistBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Adder,
    Multiplier,
    Mac,
    Square,
    Divider,
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Family> {
        match s {
            "adder" | "add" => Ok(Family::Adder),
            "multiplier" | "mul" => Ok(Family::Multiplier),
            "mac" => Ok(Family::Mac),
            "square" | "sqr" => Ok(Family::Square),
            "divider" | "div" => Ok(Family::Divider),
            other => Err(Error::Spec(format!("unknown circuit family `{other}`"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Adder => "adder",
            Family::Multiplier => "multiplier",
            Family::Mac => "mac",
            Family::Square => "square",
            Family::Divider => "divider",
        })
    }
}

/// Which golden circuit to build. `divisor_width` is only used by dividers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoldenSpec {
    pub family: Family,
    pub width: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divisor_width: Option<usize>,
}

impl GoldenSpec {
    pub fn adder(width: usize) -> GoldenSpec {
        GoldenSpec { family: Family::Adder, width, divisor_width: None }
    }

    pub fn multiplier(width: usize) -> GoldenSpec {
        GoldenSpec { family: Family::Multiplier, width, divisor_width: None }
    }

    pub fn mac(width: usize) -> GoldenSpec {
        GoldenSpec { family: Family::Mac, width, divisor_width: None }
    }

    pub fn square(width: usize) -> GoldenSpec {
        GoldenSpec { family: Family::Square, width, divisor_width: None }
    }

    pub fn divider(dividend: usize, divisor: usize) -> GoldenSpec {
        GoldenSpec { family: Family::Divider, width: dividend, divisor_width: Some(divisor) }
    }

    pub fn name(&self) -> String {
        match (self.family, self.divisor_width) {
            (Family::Divider, Some(s)) => format!("divider{}x{}", self.width, s),
            (f, _) => format!("{f}{}", self.width),
        }
    }

    pub fn num_inputs(&self) -> usize {
        let w = self.width;
        match self.family {
            Family::Adder => 2 * w + 1,
            Family::Multiplier => 2 * w,
            Family::Mac => 4 * w,
            Family::Square => w,
            Family::Divider => w + self.divisor_width.unwrap_or(w),
        }
    }

    pub fn num_outputs(&self) -> usize {
        let w = self.width;
        match self.family {
            Family::Adder => w + 1,
            Family::Multiplier | Family::Square => 2 * w,
            Family::Mac => 2 * w + 1,
            Family::Divider => w,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::Spec(format!("{}: width must be at least 1", self.family)));
        }
        match (self.family, self.divisor_width) {
            (Family::Divider, None) => Err(Error::Spec("divider needs a divisor width".into())),
            (Family::Divider, Some(0)) => Err(Error::Spec("divider: divisor width must be at least 1".into())),
            _ => Ok(()),
        }
    }

    /// Reference semantics on integers: `x` packs the input buses LSB-first.
    pub fn reference(&self, x: u128) -> u128 {
        let w = self.width;
        let mask = |bits: usize| (1u128 << bits) - 1;
        let field = |lo: usize, bits: usize| (x >> lo) & mask(bits);
        match self.family {
            Family::Adder => field(0, w) + field(w, w) + field(2 * w, 1),
            Family::Multiplier => field(0, w) * field(w, w),
            Family::Mac => field(0, w) * field(w, w) + field(2 * w, 2 * w),
            Family::Square => field(0, w) * field(0, w),
            Family::Divider => {
                let s = self.divisor_width.unwrap_or(w);
                let y = field(w, s);
                field(0, w).checked_div(y).unwrap_or(mask(w))
            }
        }
    }
}

impl fmt::Display for GoldenSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Ripple-carry addition of two little-endian buses (padded with zero to the
/// longer width); returns `max(len) + 1` bits.
fn ripple_add(b: &mut NetlistBuilder, x: &[u32], y: &[u32], carry_in: u32) -> Vec<u32> {
    let width = x.len().max(y.len());
    let zero = b.constant(false);
    let mut carry = carry_in;
    let mut out = Vec::with_capacity(width + 1);
    for i in 0..width {
        let xi = x.get(i).copied().unwrap_or(zero);
        let yi = y.get(i).copied().unwrap_or(zero);
        let (s, c) = b.full_add(xi, yi, carry);
        out.push(s);
        carry = c;
    }
    out.push(carry);
    out
}

/// Array multiplier: AND partial products accumulated row by row with
/// ripple-carry adders.
fn array_multiply(b: &mut NetlistBuilder, x: &[u32], y: &[u32]) -> Vec<u32> {
    let w = x.len();
    let zero = b.constant(false);
    let mut acc: Vec<u32> = vec![zero; 2 * w];
    for (j, &xj) in x.iter().enumerate() {
        acc[j] = b.and(xj, y[0]);
    }
    for (i, &yi) in y.iter().enumerate().skip(1) {
        let row: Vec<u32> = x.iter().map(|&xj| b.and(xj, yi)).collect();
        let mut carry = zero;
        for (j, &p) in row.iter().enumerate() {
            let (s, c) = b.full_add(acc[i + j], p, carry);
            acc[i + j] = s;
            carry = c;
        }
        if i + w < 2 * w {
            acc[i + w] = carry;
        }
    }
    acc
}

/// Restoring array divider producing the quotient.
fn restoring_divide(b: &mut NetlistBuilder, dividend: &[u32], divisor: &[u32]) -> Vec<u32> {
    let d = dividend.len();
    let s = divisor.len();
    let zero = b.constant(false);
    let mut rem: Vec<u32> = vec![zero; s];
    let mut quotient = vec![zero; d];
    for i in (0..d).rev() {
        // trial = (rem << 1) | dividend[i], s + 1 bits
        let mut trial = Vec::with_capacity(s + 1);
        trial.push(dividend[i]);
        trial.extend_from_slice(&rem);
        let mut borrow = zero;
        let mut diff = Vec::with_capacity(s + 1);
        for (k, &t) in trial.iter().enumerate() {
            let y = divisor.get(k).copied().unwrap_or(zero);
            let p = b.xor(t, y);
            diff.push(b.xor(p, borrow));
            let nt = b.not(t);
            let lt = b.and(nt, y);
            let np = b.not(p);
            let prop = b.and(np, borrow);
            borrow = b.or(lt, prop);
        }
        let q = b.not(borrow);
        quotient[i] = q;
        rem = (0..s).map(|k| b.mux(q, diff[k], trial[k])).collect();
    }
    quotient
}

/// Builds the golden netlist for `spec`.
pub fn generate(spec: &GoldenSpec) -> Result<Netlist> {
    spec.validate()?;
    let n = spec.num_inputs();
    let w = spec.width;
    let mut b = NetlistBuilder::new(n);
    let bus = |lo: usize, len: usize| (lo..lo + len).map(|j| j as u32).collect::<Vec<u32>>();
    let outputs = match spec.family {
        Family::Adder => {
            let cin = b.input(2 * w);
            ripple_add(&mut b, &bus(0, w), &bus(w, w), cin)
        }
        Family::Multiplier => array_multiply(&mut b, &bus(0, w), &bus(w, w)),
        Family::Mac => {
            let product = array_multiply(&mut b, &bus(0, w), &bus(w, w));
            let zero = b.constant(false);
            ripple_add(&mut b, &product, &bus(2 * w, 2 * w), zero)
        }
        Family::Square => {
            let a = bus(0, w);
            array_multiply(&mut b, &a, &a)
        }
        Family::Divider => {
            let s = spec.divisor_width.unwrap_or(w);
            restoring_divide(&mut b, &bus(0, w), &bus(w, s))
        }
    };
    debug_assert_eq!(outputs.len(), spec.num_outputs());
    b.finish(&spec.name(), outputs)
}

/// Active gate count, XOR/XNOR count and logic depth of a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateStats {
    pub gates: usize,
    pub xors: usize,
    pub depth: usize,
}

/// Counts over the active cone. BUF and constants are wiring, not logic, and
/// contribute neither to the gate count nor to the depth.
pub fn gate_stats(c: &Netlist) -> GateStats {
    let n = c.num_inputs();
    let active = c.active_gates();
    let mut level = vec![0usize; c.num_signals()];
    let mut stats = GateStats { gates: 0, xors: 0, depth: 0 };
    for (k, gate) in c.gates().iter().enumerate() {
        let fanin_level = gate.fanin().iter().map(|&s| level[s as usize]).max().unwrap_or(0);
        let logic = !matches!(gate.func, GateFunc::Buf | GateFunc::Const0 | GateFunc::Const1);
        level[n + k] = fanin_level + logic as usize;
        if active[k] && logic {
            stats.gates += 1;
            stats.xors += gate.func.is_xor_like() as usize;
        }
    }
    stats.depth = c.outputs().iter().map(|&o| level[o as usize]).max().unwrap_or(0);
    stats
}
