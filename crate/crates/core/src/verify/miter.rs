//! Approximation miter: golden and candidate on shared inputs, followed by a
//! subtractor, an absolute-value stage and a comparator against a constant.

use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::netlist::{Netlist, NetlistBuilder};

/// Error bound, both as the user-facing fraction of the output range and as
/// the absolute integer bound `T_abs = floor(fraction * (2^m - 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threshold {
    fraction: Ratio<u64>,
    abs_bound: u128,
    num_outputs: usize,
}

/// Largest output value of an `m`-bit circuit.
pub fn output_range(num_outputs: usize) -> u128 {
    assert!(num_outputs <= 127, "at most 127 outputs supported");
    (1u128 << num_outputs) - 1
}

/// Parses `0.001`, `1%`, `0.1%` or `1/15` into an exact fraction.
pub fn parse_fraction(text: &str) -> Result<Ratio<u64>> {
    let bad = || Error::Config(format!("invalid error fraction `{text}`"));
    let t = text.trim();
    let (body, scale) = match t.strip_suffix('%') {
        Some(b) => (b.trim(), 100u64),
        None => (t, 1u64),
    };
    let value = if let Some((num, den)) = body.split_once('/') {
        let num: u64 = num.trim().parse().map_err(|_| bad())?;
        let den: u64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        Ratio::new(num, den)
    } else {
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 18 {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac_val: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac_val)).ok_or_else(bad)?;
        Ratio::new(num, den)
    };
    Ok(value / scale)
}

impl Threshold {
    pub fn new(fraction: Ratio<u64>, num_outputs: usize) -> Result<Threshold> {
        if fraction > Ratio::from_integer(1) {
            return Err(Error::Config(format!("error fraction {fraction} exceeds 1")));
        }
        let range = output_range(num_outputs);
        let abs_bound = (*fraction.numer() as u128 * range) / *fraction.denom() as u128;
        Ok(Threshold { fraction, abs_bound, num_outputs })
    }

    pub fn parse(text: &str, num_outputs: usize) -> Result<Threshold> {
        Threshold::new(parse_fraction(text)?, num_outputs)
    }

    /// A threshold given directly as an absolute bound.
    pub fn absolute(abs_bound: u128, num_outputs: usize) -> Result<Threshold> {
        let range = output_range(num_outputs);
        if abs_bound > range {
            return Err(Error::Config(format!("absolute bound {abs_bound} exceeds output range {range}")));
        }
        let fraction = Ratio::new(abs_bound as u64, range as u64);
        Ok(Threshold { fraction, abs_bound, num_outputs })
    }

    pub fn fraction(&self) -> Ratio<u64> {
        self.fraction
    }

    pub fn abs_bound(&self) -> u128 {
        self.abs_bound
    }

    pub fn num_outputs(&self) -> usize {
        self.num_outputs
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (|e| <= {})", self.fraction, self.abs_bound)
    }
}

/// Single-output circuit that evaluates to 1 exactly on inputs where
/// `|int(G(x)) - int(C(x))| > T_abs`.
#[derive(Debug, Clone)]
pub struct Miter {
    netlist: Netlist,
    threshold: Threshold,
}

impl Miter {
    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }

    pub fn threshold(&self) -> Threshold {
        self.threshold
    }

    pub fn num_inputs(&self) -> usize {
        self.netlist.num_inputs()
    }

    /// True when structural hashing already reduced the miter to constant 0.
    pub fn is_trivially_unsat(&self) -> bool {
        let n = self.netlist.num_inputs();
        let out = self.netlist.outputs()[0] as usize;
        out >= n && self.netlist.gates()[out - n].func == crate::netlist::GateFunc::Const0
    }
}

pub fn check_interfaces(golden: &Netlist, candidate: &Netlist) -> Result<()> {
    if golden.num_inputs() != candidate.num_inputs() || golden.num_outputs() != candidate.num_outputs() {
        return Err(Error::InterfaceMismatch {
            golden_inputs: golden.num_inputs(),
            golden_outputs: golden.num_outputs(),
            candidate_inputs: candidate.num_inputs(),
            candidate_outputs: candidate.num_outputs(),
        });
    }
    Ok(())
}

/// Gate-level construction of the error comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiterStyle {
    /// Subtractor, absolute value and comparator against the bound.
    #[default]
    Plain,
    /// Two one-sided tests `G - C > T` and `C - G > T`, each a carry-save
    /// stage followed by a carry chain. No ripple XOR chains.
    CarryChain,
}

/// Builds the miter with structural hashing, so logic shared by golden and
/// candidate is merged before any clause is generated.
pub fn build_miter(golden: &Netlist, candidate: &Netlist, t: &Threshold) -> Result<Miter> {
    build_miter_with(golden, candidate, t, MiterStyle::Plain)
}

/// Carry out of `x + !y + (2^m - T) >= 2^(m+1)`, i.e. `x - y > T`.
fn exceeds(b: &mut NetlistBuilder, x: &[u32], y: &[u32], bound: u128) -> u32 {
    let m = x.len();
    let k = (1u128 << m) - bound;
    let zero = b.constant(false);
    let one = b.constant(true);
    // carry-save: s_i + 2 c_(i+1) = x_i + !y_i + k_i over bits 0..=m
    let mut sums = Vec::with_capacity(m + 1);
    let mut carries = vec![zero];
    for i in 0..=m {
        let (xi, nyi) = if i < m { (x[i], b.not(y[i])) } else { (zero, zero) };
        let ki = if (k >> i) & 1 == 1 { one } else { zero };
        let (s, c) = b.full_add(xi, nyi, ki);
        sums.push(s);
        carries.push(c);
    }
    // bit m+1 of sums + carries; the total stays below 2^(m+2)
    let mut carry = zero;
    for i in 0..=m {
        let p = b.xor(sums[i], carries[i]);
        let g = b.and(sums[i], carries[i]);
        let t = b.and(p, carry);
        carry = b.or(g, t);
    }
    b.xor(carries[m + 1], carry)
}

/// [`build_miter`] with a choice of comparison circuit.
pub fn build_miter_with(golden: &Netlist, candidate: &Netlist, t: &Threshold, style: MiterStyle) -> Result<Miter> {
    check_interfaces(golden, candidate)?;
    let m = golden.num_outputs();
    if t.num_outputs() != m {
        return Err(Error::Config(format!("threshold is for {} outputs, circuits have {m}", t.num_outputs())));
    }
    let n = golden.num_inputs();
    let mut b = NetlistBuilder::new(n);
    let inputs: Vec<u32> = (0..n as u32).collect();
    let g = b.instantiate(golden, &inputs);
    let c = b.instantiate(candidate, &inputs);

    if style == MiterStyle::CarryChain {
        let bound = t.abs_bound();
        let over = exceeds(&mut b, &g, &c, bound);
        let under = exceeds(&mut b, &c, &g, bound);
        let out = b.or(over, under);
        let netlist = b.finish("miter", vec![out])?;
        return Ok(Miter { netlist, threshold: *t });
    }

    // e = G - C as an (m+1)-bit two's-complement value; the final borrow is
    // the sign bit.
    let zero = b.constant(false);
    let mut borrow = zero;
    let mut diff = Vec::with_capacity(m);
    for i in 0..m {
        let p = b.xor(g[i], c[i]);
        diff.push(b.xor(p, borrow));
        let ng = b.not(g[i]);
        let lt = b.and(ng, c[i]);
        let np = b.not(p);
        let keep = b.and(np, borrow);
        borrow = b.or(lt, keep);
    }
    let sign = borrow;

    // |e| = (e XOR sign) + sign; fits in m bits
    let mut carry = sign;
    let mut magnitude = Vec::with_capacity(m);
    for &d in &diff {
        let flipped = b.xor(d, sign);
        magnitude.push(b.xor(flipped, carry));
        carry = b.and(flipped, carry);
    }

    // |e| > T_abs, scanning from the least significant bit
    let bound = t.abs_bound();
    let mut greater = zero;
    for (i, &a) in magnitude.iter().enumerate() {
        greater = if (bound >> i) & 1 == 1 { b.and(a, greater) } else { b.or(a, greater) };
    }
    let netlist = b.finish("miter", vec![greater])?;
    Ok(Miter { netlist, threshold: *t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genlib::{generate, GoldenSpec};

    fn stuck_at_zero(c: &Netlist, bit: usize) -> Netlist {
        c.with_output_stuck(bit, false).unwrap()
    }

    fn miter_ones(m: &Miter) -> Vec<u128> {
        (0..1u128 << m.num_inputs()).filter(|&x| m.netlist().eval_int(x).unwrap() == 1).collect()
    }

    #[test]
    fn fraction_parsing() {
        assert_eq!(parse_fraction("0.001").unwrap(), Ratio::new(1, 1000));
        assert_eq!(parse_fraction("1%").unwrap(), Ratio::new(1, 100));
        assert_eq!(parse_fraction("0.1%").unwrap(), Ratio::new(1, 1000));
        assert_eq!(parse_fraction("1/15").unwrap(), Ratio::new(1, 15));
        assert_eq!(parse_fraction("0").unwrap(), Ratio::new(0, 1));
        assert_eq!(parse_fraction(".5").unwrap(), Ratio::new(1, 2));
        for bad in ["", "abc", "1/0", "-0.1", "1.2.3", "%"] {
            assert!(parse_fraction(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn threshold_uses_floor() {
        assert_eq!(Threshold::parse("0.05", 4).unwrap().abs_bound(), 0);
        assert_eq!(Threshold::parse("1/15", 4).unwrap().abs_bound(), 1);
        assert_eq!(Threshold::parse("1%", 16).unwrap().abs_bound(), 655);
        assert_eq!(Threshold::parse("1", 4).unwrap().abs_bound(), 15);
        assert!(Threshold::parse("1.5", 4).is_err());
        assert_eq!(Threshold::absolute(3, 4).unwrap().abs_bound(), 3);
        assert!(Threshold::absolute(16, 4).is_err());
    }

    #[test]
    fn identical_circuits_give_constant_zero() {
        let g = generate(&GoldenSpec::multiplier(3)).unwrap();
        for bound in [0, 5, 63] {
            let m = build_miter(&g, &g, &Threshold::absolute(bound, 6).unwrap()).unwrap();
            assert!(miter_ones(&m).is_empty());
            assert!(m.is_trivially_unsat());
        }
    }

    #[test]
    fn stuck_lsb_multiplier() {
        let g = generate(&GoldenSpec::multiplier(2)).unwrap();
        let c = stuck_at_zero(&g, 0);
        let m = build_miter(&g, &c, &Threshold::absolute(0, 4).unwrap()).unwrap();
        let ones = miter_ones(&m);
        let odd: Vec<u128> = (0..16u128).filter(|x| ((x & 3) * (x >> 2)) % 2 == 1).collect();
        assert_eq!(ones, odd);
        assert_eq!(ones.len(), 4);
        let m = build_miter(&g, &c, &Threshold::absolute(1, 4).unwrap()).unwrap();
        assert!(miter_ones(&m).is_empty());
    }

    /// The comparison stage as a pure integer comparator: golden and
    /// candidate are wire-throughs of two independent buses.
    #[test]
    fn comparator_stage_is_exact() {
        for style in [MiterStyle::Plain, MiterStyle::CarryChain] {
            comparator_exact(style);
        }
    }

    fn comparator_exact(style: MiterStyle) {
        for m in 1..=8usize {
            let n = 2 * m;
            let range = output_range(m);
            let golden = Netlist::new("a", n, vec![], (0..m as u32).collect()).unwrap();
            let candidate = Netlist::new("b", n, vec![], (m as u32..n as u32).collect()).unwrap();
            let bounds: Vec<u128> = if m <= 4 {
                (0..=range).collect()
            } else {
                vec![0, 1, 2, 3, range / 3, range / 2, range / 2 + 1, range - 2, range - 1, range]
            };
            for bound in bounds {
                let t = Threshold::absolute(bound, m).unwrap();
                let miter = build_miter_with(&golden, &candidate, &t, style).unwrap();
                for block in 0..(1u128 << n).div_ceil(64) {
                    let base = block * 64;
                    let words: Vec<u64> = (0..n)
                        .map(|j| (0..64u128).fold(0u64, |w, l| w | ((((base + l) >> j) & 1) as u64) << l))
                        .collect();
                    let out = miter.netlist().evaluate_batch(&words).unwrap()[0];
                    for l in 0..64u128.min(1 << n) {
                        let x = base + l;
                        let a = (x & range) as i128;
                        let b = (x >> m) as i128;
                        let expected = (a - b).unsigned_abs() > bound;
                        assert_eq!((out >> l) & 1 == 1, expected, "{style:?} m={m} T={bound} x={x:#x}");
                    }
                }
            }
        }
    }

    #[test]
    fn interface_mismatch() {
        let g = generate(&GoldenSpec::multiplier(2)).unwrap();
        let c = generate(&GoldenSpec::multiplier(3)).unwrap();
        let t = Threshold::absolute(0, 4).unwrap();
        assert!(matches!(build_miter(&g, &c, &t), Err(Error::InterfaceMismatch { .. })));
    }
}
