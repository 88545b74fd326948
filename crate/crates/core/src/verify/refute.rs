//! Cheap refutation by simulation.
//!
//! Most mutants violate the bound on many inputs. Simulating them on a small
//! pool of input vectors (random ones plus earlier counterexamples) exposes
//! such violations without building a miter or calling the solver.

use rand::Rng;

use crate::netlist::Netlist;

use super::Threshold;

/// Input vectors packed 64 per block, one word per primary input.
#[derive(Debug, Clone)]
pub struct Refuter {
    num_inputs: usize,
    bound: u128,
    blocks: Vec<Vec<u64>>,
    golden_out: Vec<Vec<u64>>,
    /// Blocks from this index on hold counterexamples.
    first_cex_block: usize,
    next_cex: usize,
    scratch: Vec<u64>,
}

impl Refuter {
    /// `random_blocks` blocks of uniform random inputs and `cex_blocks`
    /// blocks reserved for counterexamples (initially the all-zero input).
    pub fn new<R: Rng + ?Sized>(
        golden: &Netlist,
        threshold: &Threshold,
        random_blocks: usize,
        cex_blocks: usize,
        rng: &mut R,
    ) -> Refuter {
        let n = golden.num_inputs();
        let mut blocks: Vec<Vec<u64>> = (0..random_blocks).map(|_| (0..n).map(|_| rng.gen()).collect()).collect();
        blocks.extend((0..cex_blocks).map(|_| vec![0u64; n]));
        let mut scratch = Vec::new();
        let golden_out = blocks.iter().map(|b| golden.simulate(b, &mut scratch)).collect();
        Refuter {
            num_inputs: n,
            bound: threshold.abs_bound(),
            blocks,
            golden_out,
            first_cex_block: random_blocks,
            next_cex: 0,
            scratch,
        }
    }

    /// An input on which `candidate` exceeds the bound, if the pool has one.
    pub fn refute(&mut self, candidate: &Netlist) -> Option<Vec<bool>> {
        for (b, block) in self.blocks.iter().enumerate() {
            let out = candidate.simulate(block, &mut self.scratch);
            let golden = &self.golden_out[b];
            let mut differ = 0u64;
            for (g, c) in golden.iter().zip(&out) {
                differ |= g ^ c;
            }
            while differ != 0 {
                let lane = differ.trailing_zeros();
                differ &= differ - 1;
                let value = |words: &[u64]| {
                    words.iter().enumerate().fold(0u128, |v, (i, w)| v | (((w >> lane) & 1) as u128) << i)
                };
                if value(golden).abs_diff(value(&out)) > self.bound {
                    return Some(block.iter().map(|w| (w >> lane) & 1 == 1).collect());
                }
            }
        }
        None
    }

    /// Adds a counterexample to the pool, replacing the oldest one.
    pub fn learn(&mut self, golden: &Netlist, witness: &[bool]) {
        let cex_lanes = (self.blocks.len() - self.first_cex_block) * 64;
        if cex_lanes == 0 || witness.len() != self.num_inputs {
            return;
        }
        let slot = self.next_cex % cex_lanes;
        self.next_cex += 1;
        let b = self.first_cex_block + slot / 64;
        let lane = slot % 64;
        for (w, &bit) in self.blocks[b].iter_mut().zip(witness) {
            *w = (*w & !(1u64 << lane)) | (bit as u64) << lane;
        }
        self.golden_out[b] = golden.simulate(&self.blocks[b], &mut self.scratch);
    }
}
