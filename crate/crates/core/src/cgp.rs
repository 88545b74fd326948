//! Cartesian Genetic Programming genotype on a single-row grid.
//!
//! A chromosome with `n` inputs and `W` columns numbers its signals like the
//! netlist does: inputs `0..n`, node `k` drives signal `n + k`. Every node is
//! a triple `(in1, in2, function code)` and may read any input or earlier
//! node (levels-back = `W`). The chromosome ends with one gene per output.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::netlist::{Area, Gate, GateFunc, Netlist};

/// Maps function codes to gate functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSet(Vec<GateFunc>);

impl FunctionSet {
    pub fn new(functions: Vec<GateFunc>) -> Result<FunctionSet> {
        if functions.is_empty() {
            return Err(Error::Config("function set must not be empty".into()));
        }
        for (i, f) in functions.iter().enumerate() {
            if functions[..i].contains(f) {
                return Err(Error::Config(format!("duplicate function {f} in function set")));
            }
        }
        Ok(FunctionSet(functions))
    }

    pub fn functions(&self) -> &[GateFunc] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, code: u32) -> Option<GateFunc> {
        self.0.get(code as usize).copied()
    }

    pub fn code_of(&self, func: GateFunc) -> Option<u32> {
        self.0.iter().position(|&f| f == func).map(|p| p as u32)
    }

    fn with(&self, func: GateFunc) -> FunctionSet {
        let mut v = self.0.clone();
        if !v.contains(&func) {
            v.push(func);
        }
        FunctionSet(v)
    }
}

impl Default for FunctionSet {
    /// The seven library gates plus BUF.
    fn default() -> FunctionSet {
        FunctionSet(vec![
            GateFunc::Inv,
            GateFunc::And,
            GateFunc::Or,
            GateFunc::Xor,
            GateFunc::Nand,
            GateFunc::Nor,
            GateFunc::Xnor,
            GateFunc::Buf,
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Node {
    pub inputs: [u32; 2],
    pub func: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chromosome {
    num_inputs: usize,
    nodes: Vec<Node>,
    outputs: Vec<u32>,
    functions: Arc<FunctionSet>,
}

/// How many genes an offspring gets mutated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutationPolicy {
    /// Mutation frequency `X` in percent.
    pub frequency_pct: f64,
    /// Upper bound `M` on mutations per offspring; at least one.
    pub max_mutations: usize,
}

impl MutationPolicy {
    /// `M = round(0.01 * X * gates(G))`, clamped to at least one.
    pub fn from_frequency(frequency_pct: f64, golden_gates: usize) -> Result<MutationPolicy> {
        if frequency_pct.is_nan() || frequency_pct <= 0.0 || !frequency_pct.is_finite() {
            return Err(Error::Config(format!("mutation frequency must be positive, got {frequency_pct}")));
        }
        let max_mutations = ((0.01 * frequency_pct * golden_gates as f64).round() as usize).max(1);
        Ok(MutationPolicy { frequency_pct, max_mutations })
    }

    pub fn fixed(max_mutations: usize) -> MutationPolicy {
        MutationPolicy { frequency_pct: 0.0, max_mutations: max_mutations.max(1) }
    }
}

impl Chromosome {
    /// Assembles a chromosome from raw genes, checking every gene's domain.
    pub fn from_genes(
        num_inputs: usize,
        nodes: Vec<Node>,
        outputs: Vec<u32>,
        functions: FunctionSet,
    ) -> Result<Chromosome> {
        let ch = Chromosome { num_inputs, nodes, outputs, functions: Arc::new(functions) };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_inputs == 0 || self.outputs.is_empty() {
            return Err(Error::Decode("chromosome needs at least one input and one output".into()));
        }
        for (k, node) in self.nodes.iter().enumerate() {
            let limit = (self.num_inputs + k) as u32;
            if node.inputs.iter().any(|&s| s >= limit) {
                return Err(Error::Decode(format!("node {} reads a signal at or beyond itself", self.num_inputs + k)));
            }
            if self.functions.get(node.func).is_none() {
                return Err(Error::Decode(format!(
                    "node {} has unknown function code {}",
                    self.num_inputs + k,
                    node.func
                )));
            }
        }
        let total = (self.num_inputs + self.nodes.len()) as u32;
        if self.outputs.iter().any(|&o| o >= total) {
            return Err(Error::Decode("output gene refers to an undefined signal".into()));
        }
        Ok(())
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn columns(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn outputs(&self) -> &[u32] {
        &self.outputs
    }

    pub fn functions(&self) -> &FunctionSet {
        &self.functions
    }

    /// Total gene count: `3W + m`.
    pub fn len(&self) -> usize {
        3 * self.nodes.len() + self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The genes as a flat integer string.
    pub fn genes(&self) -> Vec<u32> {
        let mut g = Vec::with_capacity(self.len());
        for node in &self.nodes {
            g.extend_from_slice(&[node.inputs[0], node.inputs[1], node.func]);
        }
        g.extend_from_slice(&self.outputs);
        g
    }

    fn func_of(&self, node: &Node) -> GateFunc {
        self.functions.get(node.func).expect("function code validated")
    }

    /// Marks nodes on a path to an output.
    pub fn active_mask(&self) -> Vec<bool> {
        let n = self.num_inputs;
        let mut active = vec![false; self.nodes.len()];
        for &o in &self.outputs {
            if o as usize >= n {
                active[o as usize - n] = true;
            }
        }
        for k in (0..self.nodes.len()).rev() {
            if !active[k] {
                continue;
            }
            let node = &self.nodes[k];
            let arity = self.func_of(node).arity();
            for &s in &node.inputs[..arity] {
                if s as usize >= n {
                    active[s as usize - n] = true;
                }
            }
        }
        active
    }

    /// Number of active nodes; equals the gate count of `decode()`.
    pub fn active_count(&self) -> usize {
        self.active_mask().iter().filter(|&&a| a).count()
    }

    /// Area of the active nodes; equals `decode()?.size()`.
    pub fn active_size(&self) -> Area {
        self.active_mask().iter().zip(&self.nodes).filter(|(a, _)| **a).map(|(_, node)| self.func_of(node).area()).sum()
    }

    /// Builds the netlist of the active nodes. Inactive nodes are dropped from
    /// the netlist but stay in the chromosome.
    pub fn decode(&self) -> Result<Netlist> {
        self.validate()?;
        let n = self.num_inputs as u32;
        let active = self.active_mask();
        let mut remap: Vec<u32> = (0..n).collect();
        let mut gates = Vec::new();
        for (k, node) in self.nodes.iter().enumerate() {
            if active[k] {
                let func = self.func_of(node);
                let a = remap[node.inputs[0] as usize];
                let b = remap[node.inputs[1] as usize];
                remap.push(n + gates.len() as u32);
                gates.push(Gate::new(func, a, b));
            } else {
                remap.push(u32::MAX);
            }
        }
        let outputs = self.outputs.iter().map(|&o| remap[o as usize]).collect();
        Netlist::new("candidate", self.num_inputs, gates, outputs)
    }

    /// Returns a mutated copy. `k ~ Uniform{1..=M}` genes are picked uniformly
    /// and resampled uniformly from their legal domain (the new value may equal
    /// the old one).
    pub fn mutate<R: Rng + ?Sized>(&self, policy: &MutationPolicy, rng: &mut R) -> Chromosome {
        let mut child = self.clone();
        let count = rng.gen_range(1..=policy.max_mutations.max(1));
        for _ in 0..count {
            child.mutate_gene(rng);
        }
        child
    }

    fn mutate_gene<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.num_inputs as u32;
        let w = self.nodes.len();
        let gene = rng.gen_range(0..self.len());
        if gene < 3 * w {
            let k = gene / 3;
            match gene % 3 {
                2 => self.nodes[k].func = rng.gen_range(0..self.functions.len() as u32),
                slot => self.nodes[k].inputs[slot] = rng.gen_range(0..n + k as u32),
            }
        } else {
            let t = gene - 3 * w;
            self.outputs[t] = rng.gen_range(0..n + w as u32);
        }
    }

    /// Parses the parenthesised triple dump, e.g.
    /// `(0, 2, 2) (0, 1, 0) (5, 8)`. The last group lists the output genes.
    pub fn from_dump(text: &str, num_inputs: usize, functions: FunctionSet) -> Result<Chromosome> {
        let mut groups = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let open = rest.strip_prefix('(').ok_or_else(|| Error::Decode(format!("expected `(` at `{rest}`")))?;
            let close = open.find(')').ok_or_else(|| Error::Decode("unbalanced parenthesis".into()))?;
            let values = open[..close]
                .split(',')
                .map(|v| v.trim().parse::<u32>().map_err(|_| Error::Decode(format!("bad gene `{}`", v.trim()))))
                .collect::<Result<Vec<u32>>>()?;
            groups.push(values);
            rest = open[close + 1..].trim_start();
        }
        let outputs = groups.pop().ok_or_else(|| Error::Decode("empty chromosome".into()))?;
        let nodes = groups
            .into_iter()
            .map(|g| match g.as_slice() {
                &[a, b, f] => Ok(Node { inputs: [a, b], func: f }),
                _ => Err(Error::Decode(format!("node triple expected, found {g:?}"))),
            })
            .collect::<Result<Vec<Node>>>()?;
        Chromosome::from_genes(num_inputs, nodes, outputs, functions)
    }
}

impl fmt::Display for Chromosome {
    /// `(in1, in2, f) ... (o0, o1, ...)`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for node in &self.nodes {
            write!(f, "({}, {}, {}) ", node.inputs[0], node.inputs[1], node.func)?;
        }
        let outs: Vec<String> = self.outputs.iter().map(u32::to_string).collect();
        write!(f, "({})", outs.join(", "))
    }
}

/// Encodes a netlist on a `1 x columns` grid using the default function set,
/// extended with any function the netlist uses that the set lacks.
pub fn encode(c: &Netlist, columns: usize) -> Result<Chromosome> {
    encode_with(c, columns, &FunctionSet::default())
}

pub fn encode_with(c: &Netlist, columns: usize, functions: &FunctionSet) -> Result<Chromosome> {
    if c.gates().len() > columns {
        return Err(Error::GridTooSmall { gates: c.gates().len(), columns });
    }
    let mut set = functions.clone();
    for g in c.gates() {
        set = set.with(g.func);
    }
    let mut nodes: Vec<Node> = c
        .gates()
        .iter()
        .map(|g| Node { inputs: g.inputs, func: set.code_of(g.func).expect("function added above") })
        .collect();
    // padding columns stay inactive
    nodes.resize(columns, Node { inputs: [0, 0], func: 0 });
    Chromosome::from_genes(c.num_inputs(), nodes, c.outputs().to_vec(), set)
}
