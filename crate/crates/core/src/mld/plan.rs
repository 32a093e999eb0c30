use std::ops::Range;

use super::ring::MAX_DEGREE;
use super::{MldParams, MldResult};
use crate::circuit::{Circuit, NodeKind};

const ZERO: u8 = 0;
const SCALAR: u8 = 1;
const GENERAL: u8 = 2;

/// Character ranges are split into at most this many chunks. Fixed so that
/// results do not depend on the thread count.
const MAX_CHUNKS: u64 = 64;

#[derive(Debug, Clone, Copy)]
enum Op {
    Var(u32),
    Add,
    Mul,
}

#[derive(Debug, Clone, Copy)]
struct Instr {
    op: Op,
    start: u32,
    end: u32,
}

/// How to sweep the characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is on; sequential otherwise.
    #[default]
    Parallel,
}

/// A compact straight-line program over the nodes that can both be nonzero
/// and reach a selected output.
#[derive(Debug, Clone)]
pub struct EvalPlan {
    instrs: Vec<Instr>,
    args: Vec<u32>,
    arg_fp: Vec<u32>,
    /// Slot of each selected output; `None` if it is identically zero.
    outputs: Vec<Option<u32>>,
}

impl EvalPlan {
    pub fn new(c: &Circuit) -> Self {
        let all: Vec<usize> = (0..c.outputs().len()).collect();
        Self::restricted(c, None, &all)
    }

    /// Plan for the outputs at the given indices, ignoring edges with
    /// `edge_alive[e] == false`. A multiplication gate that lost an input is
    /// identically zero.
    pub fn restricted(c: &Circuit, edge_alive: Option<&[bool]>, outputs: &[usize]) -> Self {
        let n = c.num_nodes();
        let alive = |e: usize| edge_alive.map_or(true, |a| a[e]);
        let mut nonzero = vec![false; n];
        for v in 0..n {
            let range = c.in_edge_range(v as u32);
            nonzero[v] = match c.node(v as u32).kind {
                NodeKind::Variable(_) => true,
                NodeKind::Add => range.into_iter().any(|e| alive(e) && nonzero[c.edge_source(e) as usize]),
                NodeKind::Mul => range.into_iter().all(|e| alive(e) && nonzero[c.edge_source(e) as usize]),
            };
        }
        let mut needed = vec![false; n];
        for &i in outputs {
            let o = c.outputs()[i].node as usize;
            needed[o] = nonzero[o];
        }
        for v in (0..n).rev() {
            if !needed[v] {
                continue;
            }
            for e in c.in_edge_range(v as u32) {
                let u = c.edge_source(e) as usize;
                if alive(e) && nonzero[u] {
                    needed[u] = true;
                }
            }
        }

        let mut slot = vec![u32::MAX; n];
        let mut instrs = Vec::new();
        let mut args = Vec::new();
        let mut arg_fp = Vec::new();
        for v in 0..n {
            if !needed[v] {
                continue;
            }
            let start = args.len() as u32;
            let op = match c.node(v as u32).kind {
                NodeKind::Variable(label) => Op::Var(label),
                NodeKind::Add => Op::Add,
                NodeKind::Mul => Op::Mul,
            };
            if !matches!(op, Op::Var(_)) {
                for e in c.in_edge_range(v as u32) {
                    let u = c.edge_source(e) as usize;
                    if alive(e) && needed[u] {
                        args.push(slot[u]);
                        arg_fp.push(c.edge_fingerprint(e));
                    }
                }
            }
            slot[v] = instrs.len() as u32;
            instrs.push(Instr { op, start, end: args.len() as u32 });
        }
        let outputs = outputs
            .iter()
            .map(|&i| {
                let s = slot[c.outputs()[i].node as usize];
                (s != u32::MAX).then_some(s)
            })
            .collect();
        Self { instrs, args, arg_fp, outputs }
    }

    pub fn num_instructions(&self) -> usize {
        self.instrs.len()
    }

    pub fn num_arguments(&self) -> usize {
        self.args.len()
    }

    pub fn evaluate(&self, params: &MldParams) -> MldResult {
        self.evaluate_with(params, Execution::default())
    }

    pub fn evaluate_with(&self, params: &MldParams, exec: Execution) -> MldResult {
        let ring = &params.ring;
        let d = ring.degree();
        let fp_bits: Vec<u32> = self
            .arg_fp
            .iter()
            .map(|&f| params.fingerprints.get(f as usize).copied().unwrap_or(0))
            .collect();
        let total = 1u64 << ring.k();
        let chunks = total.min(MAX_CHUNKS);
        let range = |i: u64| i * total / chunks..(i + 1) * total / chunks;
        let width = self.outputs.len() * d;
        let merge = |mut a: Vec<u64>, b: Vec<u64>| {
            for (x, y) in a.iter_mut().zip(b) {
                *x = x.wrapping_add(y);
            }
            a
        };

        let acc = match exec {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..chunks)
                    .into_par_iter()
                    .map(|i| self.run_chunk(params, &fp_bits, range(i)))
                    .reduce(|| vec![0; width], merge)
            }
            _ => (0..chunks)
                .map(|i| self.run_chunk(params, &fp_bits, range(i)))
                .fold(vec![0; width], merge),
        };
        let detected = (0..self.outputs.len())
            .map(|o| acc[o * d..(o + 1) * d].iter().any(|&x| x & ring.mask() != 0))
            .collect();
        MldResult { detected }
    }

    fn run_chunk(&self, params: &MldParams, fp_bits: &[u32], chars: Range<u64>) -> Vec<u64> {
        let ring = &params.ring;
        let d = ring.degree();
        let mask = ring.mask();
        let n = self.instrs.len();
        let mut state = vec![ZERO; n];
        let mut vals = vec![0u64; n * d];
        let mut wide = [0u64; 2 * MAX_DEGREE];
        let mut tmp = [0u64; MAX_DEGREE];
        let mut acc = vec![0u64; self.outputs.len() * d];
        let vectors = &params.variable_vectors;

        for idx in chars {
            let chi = idx ^ (idx >> 1);
            for (s, ins) in self.instrs.iter().enumerate() {
                let (done, rest) = vals.split_at_mut(s * d);
                let out = &mut rest[..d];
                let args = ins.start as usize..ins.end as usize;
                state[s] = match ins.op {
                    Op::Var(label) => {
                        if (vectors[label as usize] & chi).count_ones() & 1 == 0 {
                            out[0] = 2 & mask;
                            SCALAR
                        } else {
                            ZERO
                        }
                    }
                    Op::Add => {
                        wide[..2 * d - 1].fill(0);
                        let mut any = false;
                        let mut general = false;
                        for a in args {
                            let child = self.args[a] as usize;
                            let st = state[child];
                            if st == ZERO {
                                continue;
                            }
                            any = true;
                            let mut bits = fp_bits[a];
                            if st == SCALAR {
                                let x = done[child * d];
                                while bits != 0 {
                                    let i = bits.trailing_zeros() as usize;
                                    wide[i] = wide[i].wrapping_add(x);
                                    bits &= bits - 1;
                                }
                            } else {
                                general = true;
                                let cv = &done[child * d..child * d + d];
                                while bits != 0 {
                                    let i = bits.trailing_zeros() as usize;
                                    for (w, &x) in wide[i..i + d].iter_mut().zip(cv) {
                                        *w = w.wrapping_add(x);
                                    }
                                    bits &= bits - 1;
                                }
                            }
                        }
                        if !any {
                            ZERO
                        } else {
                            if general {
                                ring.reduce_into(&mut wide, out);
                            } else {
                                for (o, &w) in out.iter_mut().zip(wide.iter()) {
                                    *o = w & mask;
                                }
                            }
                            if out.iter().all(|&x| x == 0) {
                                ZERO
                            } else {
                                GENERAL
                            }
                        }
                    }
                    Op::Mul => {
                        let mut scalar = 1u64;
                        let mut have_general = false;
                        let mut zero = false;
                        for a in args {
                            let child = self.args[a] as usize;
                            match state[child] {
                                ZERO => {
                                    zero = true;
                                    break;
                                }
                                SCALAR => scalar = scalar.wrapping_mul(done[child * d]) & mask,
                                _ => {
                                    let cv = &done[child * d..child * d + d];
                                    if have_general {
                                        ring.mul_into(out, cv, &mut tmp[..d], &mut wide);
                                        out.copy_from_slice(&tmp[..d]);
                                    } else {
                                        out.copy_from_slice(cv);
                                        have_general = true;
                                    }
                                }
                            }
                            if scalar == 0 {
                                zero = true;
                                break;
                            }
                        }
                        if zero {
                            ZERO
                        } else if !have_general {
                            out[0] = scalar;
                            SCALAR
                        } else {
                            let mut nonzero = false;
                            for x in out.iter_mut() {
                                *x = x.wrapping_mul(scalar) & mask;
                                nonzero |= *x != 0;
                            }
                            if nonzero {
                                GENERAL
                            } else {
                                ZERO
                            }
                        }
                    }
                };
            }
            for (o, slot) in self.outputs.iter().enumerate() {
                let Some(s) = *slot else { continue };
                let s = s as usize;
                let dst = &mut acc[o * d..(o + 1) * d];
                match state[s] {
                    ZERO => {}
                    SCALAR => dst[0] = dst[0].wrapping_add(vals[s * d]),
                    _ => {
                        for (x, &y) in dst.iter_mut().zip(&vals[s * d..s * d + d]) {
                            *x = x.wrapping_add(y);
                        }
                    }
                }
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build, CircuitType, Target};
    use crate::instance::{compute_bounds, generate_random, preprocess, GenConfig};

    #[test]
    fn sequential_and_parallel_agree() {
        for seed in 0..10 {
            let cfg = GenConfig { integral: true, ..GenConfig::new(6, 5, 4, seed) };
            let mi = preprocess(&generate_random(&cfg).unwrap(), 1.0).unwrap();
            let c = build(CircuitType::SemiCompact, &mi, compute_bounds(&mi), Target::AllOutputs)
                .unwrap();
            let plan = EvalPlan::new(&c);
            let p = MldParams::sample(&c, seed).unwrap();
            assert_eq!(
                plan.evaluate_with(&p, Execution::Sequential),
                plan.evaluate_with(&p, Execution::Parallel)
            );
        }
    }

    #[test]
    fn masking_every_edge_silences_outputs() {
        let cfg = GenConfig { integral: true, ..GenConfig::new(5, 3, 2, 4) };
        let mi = preprocess(&generate_random(&cfg).unwrap(), 1.0).unwrap();
        let c = build(CircuitType::Compact, &mi, compute_bounds(&mi), Target::AllOutputs).unwrap();
        let dead = vec![false; c.num_edges()];
        let all: Vec<usize> = (0..c.outputs().len()).collect();
        let plan = EvalPlan::restricted(&c, Some(&dead), &all);
        assert_eq!(plan.num_instructions(), 0);
        let p = MldParams::sample(&c, 1).unwrap();
        assert!(!plan.evaluate(&p).any());
    }
}
