//! Line-oriented netlist text format.
//!
//! ```text
//! circuit <name> inputs <n> outputs <m>
//! g<k> = <FUNC> <ref> [<ref>]
//! out<t> = <ref>
//! ```
//!
//! `ref` is `i<j>` (primary input) or `g<j>` with `j < k`. Gate ids are dense
//! from `g0`, outputs are listed in order after the gates. `#` starts a comment.

use std::fmt::Write as _;

use super::{Gate, GateFunc, Netlist};
use crate::error::{Error, Result};

enum Ref {
    Input(usize),
    Gate(usize),
}

fn parse_ref(token: &str, line: usize) -> Result<Ref> {
    if let Some(j) = parse_indexed(token, "i") {
        Ok(Ref::Input(j))
    } else if let Some(j) = parse_indexed(token, "g") {
        Ok(Ref::Gate(j))
    } else {
        Err(Error::Syntax { line, msg: format!("malformed reference `{token}`") })
    }
}

fn parse_indexed(token: &str, prefix: &str) -> Option<usize> {
    let digits = token.strip_prefix(prefix)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

struct Line<'a> {
    number: usize,
    tokens: Vec<&'a str>,
}

pub(super) fn parse(text: &str) -> Result<Netlist> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, raw)| {
            let body = raw.split('#').next().unwrap_or("");
            Line { number: i + 1, tokens: body.split_whitespace().collect() }
        })
        .filter(|l| !l.tokens.is_empty());

    let header = lines.next().ok_or(Error::Syntax { line: 1, msg: "empty netlist".into() })?;
    let (name, n, m) = match header.tokens.as_slice() {
        ["circuit", name, "inputs", n, "outputs", m] => {
            let bad = |what: &str| Error::Syntax { line: header.number, msg: format!("invalid {what} count") };
            (
                name.to_string(),
                n.parse::<usize>().map_err(|_| bad("input"))?,
                m.parse::<usize>().map_err(|_| bad("output"))?,
            )
        }
        _ => {
            return Err(Error::Syntax {
                line: header.number,
                msg: "expected `circuit <name> inputs <n> outputs <m>`".into(),
            })
        }
    };

    let body: Vec<Line> = lines.collect();
    let defined_gates = body.iter().filter(|l| l.tokens.first().is_some_and(|t| t.starts_with('g'))).count();

    let mut gates = Vec::new();
    let mut outputs = Vec::new();
    for line in &body {
        let ln = line.number;
        let resolve = |token: &str, before: usize| -> Result<u32> {
            match parse_ref(token, ln)? {
                Ref::Input(j) if j < n => Ok(j as u32),
                Ref::Gate(j) if j < before => Ok((n + j) as u32),
                Ref::Gate(j) if j < defined_gates => {
                    Err(Error::OrderViolation { line: ln, reference: token.to_string() })
                }
                _ => Err(Error::DanglingReference { line: ln, reference: token.to_string() }),
            }
        };
        match line.tokens.as_slice() {
            [lhs, "=", rest @ ..] if lhs.starts_with('g') => {
                let k = parse_indexed(lhs, "g")
                    .ok_or_else(|| Error::Syntax { line: ln, msg: format!("malformed gate id `{lhs}`") })?;
                if !outputs.is_empty() {
                    return Err(Error::Syntax { line: ln, msg: "gate defined after outputs".into() });
                }
                if k != gates.len() {
                    return Err(Error::Syntax {
                        line: ln,
                        msg: format!("expected gate id g{}, found `{lhs}`", gates.len()),
                    });
                }
                let (func_name, refs) = rest
                    .split_first()
                    .ok_or_else(|| Error::Syntax { line: ln, msg: "missing gate function".into() })?;
                let func = GateFunc::from_name(func_name)
                    .ok_or_else(|| Error::Syntax { line: ln, msg: format!("unknown gate function `{func_name}`") })?;
                if refs.len() != func.arity() {
                    return Err(Error::Syntax {
                        line: ln,
                        msg: format!("{func} takes {} inputs, found {}", func.arity(), refs.len()),
                    });
                }
                let ins = refs.iter().map(|r| resolve(r, k)).collect::<Result<Vec<u32>>>()?;
                let a = ins.first().copied().unwrap_or(0);
                let b = ins.get(1).copied().unwrap_or(a);
                gates.push(Gate::new(func, a, b));
            }
            [lhs, "=", r] if lhs.starts_with("out") => {
                let t = parse_indexed(lhs, "out")
                    .ok_or_else(|| Error::Syntax { line: ln, msg: format!("malformed output id `{lhs}`") })?;
                if t != outputs.len() {
                    return Err(Error::Syntax {
                        line: ln,
                        msg: format!("expected out{}, found `{lhs}`", outputs.len()),
                    });
                }
                if t >= m {
                    return Err(Error::Syntax { line: ln, msg: format!("more than {m} outputs") });
                }
                outputs.push(resolve(r, gates.len())?);
            }
            _ => return Err(Error::Syntax { line: ln, msg: "unrecognised line".into() }),
        }
    }
    if outputs.len() != m {
        return Err(Error::Syntax {
            line: body.last().map_or(header.number, |l| l.number),
            msg: format!("expected {m} outputs, found {}", outputs.len()),
        });
    }
    Netlist::new(name, n, gates, outputs)
}

fn render_ref(signal: u32, n: usize) -> String {
    let s = signal as usize;
    if s < n {
        format!("i{s}")
    } else {
        format!("g{}", s - n)
    }
}

pub(super) fn serialize(c: &Netlist) -> String {
    let n = c.num_inputs();
    let mut out = String::new();
    let _ = writeln!(out, "circuit {} inputs {} outputs {}", c.name(), n, c.num_outputs());
    for (k, gate) in c.gates().iter().enumerate() {
        let _ = write!(out, "g{k} = {}", gate.func);
        for &s in gate.fanin() {
            let _ = write!(out, " {}", render_ref(s, n));
        }
        out.push('\n');
    }
    for (t, &o) in c.outputs().iter().enumerate() {
        let _ = writeln!(out, "out{t} = {}", render_ref(o, n));
    }
    out
}
