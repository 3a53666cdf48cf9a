// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Backward may-liveness, interprocedural through call summaries.
//!
//! A callee `g` is summarized by the registers it reads before writing
//! (`gen`) and the registers it leaves untouched on some path (`pass`), so
//! the registers live before a call with `X` live after it are
//! `(gen ∪ (X ∩ pass)) \ {r14}`. Because the transfer functions are
//! gen/kill, this summary is exact.

use alloc::vec;
use alloc::vec::Vec;

use super::cfg::block_succs;
use super::{FuncId, Function, Instruction, Op, Program, RegSet, LINK_REG};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    pub gen: RegSet,
    pub pass: RegSet,
}

impl Summary {
    pub fn apply(self, after: RegSet) -> RegSet {
        self.gen.union(after.intersect(self.pass))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionLiveness {
    pub live_in: Vec<RegSet>,
    pub live_out: Vec<RegSet>,
}

/// Registers live immediately before `insn` given those live after it.
pub(crate) fn transfer(insn: &Instruction, after: RegSet, summaries: &[Summary]) -> RegSet {
    match insn.op {
        Op::Call { callee } => {
            let mut live = summaries[callee.0 as usize].apply(after);
            live.remove(LINK_REG);
            live
        }
        op => {
            let mut live = after;
            if let Some(d) = op.def() {
                live.remove(d);
            }
            live.union(op.uses())
        }
    }
}

/// Block-level fixed point for one function. `exit_live` is what the
/// caller needs after a `ret`.
pub fn function_liveness(f: &Function, summaries: &[Summary], exit_live: RegSet) -> FunctionLiveness {
    let n = f.blocks.len();
    let succs: Vec<_> = (0..n).map(|b| block_succs(f, b)).collect();
    let mut live_in = vec![RegSet::EMPTY; n];
    let mut live_out = vec![RegSet::EMPTY; n];
    let mut changed = true;
    while changed {
        changed = false;
        for b in (0..n).rev() {
            let block = &f.blocks[b];
            let out = match block.insns.last().map(|i| i.op) {
                Some(Op::Ret) => exit_live,
                _ => succs[b].iter().fold(RegSet::EMPTY, |acc, s| acc.union(live_in[s.index()])),
            };
            let inn = block.insns.iter().rev().fold(out, |live, i| transfer(i, live, summaries));
            if out != live_out[b] || inn != live_in[b] {
                live_out[b] = out;
                live_in[b] = inn;
                changed = true;
            }
        }
    }
    FunctionLiveness { live_in, live_out }
}

/// Liveness of every function, with each function's exit set taken from
/// its call sites.
#[derive(Clone, Debug)]
pub struct ProgramLiveness {
    pub summaries: Vec<Summary>,
    /// Registers live after `ret` in some caller; empty for `main`.
    pub exit_live: Vec<RegSet>,
    pub functions: Vec<FunctionLiveness>,
}

impl ProgramLiveness {
    pub fn compute(p: &Program) -> ProgramLiveness {
        let order = p.bottom_up_order().expect("validated program has an acyclic call graph");
        let nf = p.functions.len();
        let mut summaries = vec![Summary::default(); nf];
        for &f in &order {
            let func = p.function(f);
            let entry_live = |exit| function_liveness(func, &summaries, exit).live_in[0];
            let gen = entry_live(RegSet::EMPTY);
            let pass = RegSet::ALL
                .iter()
                .filter(|&r| entry_live(RegSet::single(r)).contains(r))
                .collect();
            summaries[f.0 as usize] = Summary { gen, pass };
        }

        let mut exit_live = vec![RegSet::EMPTY; nf];
        let mut functions = vec![FunctionLiveness { live_in: Vec::new(), live_out: Vec::new() }; nf];
        for &f in order.iter().rev() {
            let func = p.function(f);
            let fl = function_liveness(func, &summaries, exit_live[f.0 as usize]);
            for (b, block) in func.blocks.iter().enumerate() {
                let mut live = fl.live_out[b];
                for insn in block.insns.iter().rev() {
                    if let Op::Call { callee } = insn.op {
                        exit_live[callee.0 as usize] = exit_live[callee.0 as usize].union(live);
                    }
                    live = transfer(insn, live, &summaries);
                }
            }
            functions[f.0 as usize] = fl;
        }
        ProgramLiveness { summaries, exit_live, functions }
    }

    /// Registers live immediately before instruction `idx` of `block`
    /// (`idx == len` gives the block's live-out).
    pub fn live_before(&self, p: &Program, f: FuncId, block: usize, idx: usize) -> RegSet {
        let fl = &self.functions[f.0 as usize];
        let insns = &p.function(f).blocks[block].insns;
        insns[idx..]
            .iter()
            .rev()
            .fold(fl.live_out[block], |live, i| transfer(i, live, &self.summaries))
    }
}
