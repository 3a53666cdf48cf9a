// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Undoing a previous regionization and putting calls and halts at block
//! ends, so every boundary the regionizer needs falls on a block start.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ir::{BasicBlock, BlockId, BoundaryKind, CodeRef, Function, Op, Program, StoreValue};

/// `(block, instruction index)` inside one function.
pub(crate) type Point = (u32, u32);

pub(crate) struct Normalized {
    pub program: Program,
    /// Budget cuts carried over from an earlier run, per function.
    pub seeds: Vec<BTreeSet<Point>>,
}

pub(crate) fn unique_label(f: &Function, taken: &[String], base: &str, tag: &str) -> String {
    let exists = |l: &str| f.blocks.iter().any(|b| b.label == l) || taken.iter().any(|t| t == l);
    let first = format!("{base}.{tag}");
    if !exists(&first) {
        return first;
    }
    (1..).map(|k| format!("{base}.{tag}{k}")).find(|l| !exists(l)).expect("unbounded")
}

/// Edge blocks created for a branch: checkpoints, then `jmp` for a taken
/// edge (`*.t`) or a fallthrough into the next block (`*.f`).
fn edge_kind(b: &BasicBlock) -> Option<char> {
    let (_, tail) = b.label.rsplit_once('.')?;
    let kind = tail.chars().next()?;
    if !(kind == 't' || kind == 'f') || !tail[1..].bytes().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let (last, body) = b.insns.split_last()?;
    let jumps = matches!(last.op, Op::Jump { .. });
    let ckpts_ok = match kind {
        't' => jumps && !body.is_empty() && body.iter().all(|i| i.checkpoint),
        _ => b.insns.iter().all(|i| i.checkpoint),
    };
    ckpts_ok.then_some(kind)
}

fn strip_function(f: &Function) -> (Function, BTreeSet<Point>) {
    let n = f.blocks.len();
    // Where references to each old block should point after removal.
    let mut redirect: Vec<usize> = (0..n).collect();
    let mut keep = alloc::vec![true; n];
    for (i, b) in f.blocks.iter().enumerate() {
        match edge_kind(b) {
            Some('t') => {
                if let Some(Op::Jump { target }) = b.insns.last().map(|i| i.op) {
                    keep[i] = false;
                    redirect[i] = target.index();
                }
            }
            Some(_) if i + 1 < n => {
                keep[i] = false;
                redirect[i] = i + 1;
            }
            _ => {}
        }
    }
    let resolve = |mut i: usize| {
        let mut hops = 0;
        while !keep[i] && hops <= n {
            i = redirect[i];
            hops += 1;
        }
        i
    };
    let mut new_index = alloc::vec![u32::MAX; n];
    let mut next = 0u32;
    for i in 0..n {
        if keep[i] {
            new_index[i] = next;
            next += 1;
        }
    }
    let map = |b: BlockId| BlockId(new_index[resolve(b.index())]);
    let mut seeds = BTreeSet::new();
    let mut blocks = Vec::new();
    for (i, b) in f.blocks.iter().enumerate() {
        if !keep[i] {
            continue;
        }
        if b.region.and_then(|t| t.boundary) == Some(BoundaryKind::StoreBudgetCut) {
            seeds.insert((new_index[i], 0));
        }
        let mut nb = BasicBlock::new(b.label.clone());
        for insn in b.insns.iter().filter(|i| !i.checkpoint) {
            let mut insn = *insn;
            insn.bypass = false;
            match &mut insn.op {
                Op::Branch { target, .. } | Op::Jump { target } => *target = map(*target),
                Op::Store { value: StoreValue::Code(CodeRef::Block(t)), .. } => *t = map(*t),
                _ => {}
            }
            nb.insns.push(insn);
        }
        blocks.push(nb);
    }
    (Function { name: f.name.clone(), blocks }, seeds)
}

/// Splits blocks after every `call` and around every `halt`.
fn split_function(f: &Function, seeds: &BTreeSet<Point>) -> (Function, BTreeSet<Point>) {
    // Pieces of each old block as (start, end) instruction ranges.
    let mut pieces: Vec<Vec<(usize, usize)>> = Vec::with_capacity(f.blocks.len());
    for b in &f.blocks {
        let mut cuts = Vec::new();
        for (i, insn) in b.insns.iter().enumerate() {
            match insn.op {
                Op::Call { .. } if i + 1 < b.insns.len() => cuts.push(i + 1),
                Op::Halt if i > 0 => cuts.push(i),
                _ => {}
            }
        }
        // `call` directly followed by `halt` yields the same cut twice
        cuts.dedup();
        let mut ranges = Vec::new();
        let mut start = 0;
        for c in cuts {
            ranges.push((start, c));
            start = c;
        }
        ranges.push((start, b.insns.len()));
        pieces.push(ranges);
    }
    let mut first_piece = Vec::with_capacity(f.blocks.len());
    let mut count = 0u32;
    for p in &pieces {
        first_piece.push(count);
        count += p.len() as u32;
    }
    let mut blocks: Vec<BasicBlock> = Vec::with_capacity(count as usize);
    let mut taken: Vec<String> = Vec::new();
    for (bi, b) in f.blocks.iter().enumerate() {
        for (pi, &(s, e)) in pieces[bi].iter().enumerate() {
            let label = if pi == 0 { b.label.clone() } else { unique_label(f, &taken, &b.label, "s") };
            taken.push(label.clone());
            let mut nb = BasicBlock::new(label);
            for insn in &b.insns[s..e] {
                let mut insn = *insn;
                match &mut insn.op {
                    Op::Branch { target, .. } | Op::Jump { target } => {
                        *target = BlockId(first_piece[target.index()])
                    }
                    Op::Store { value: StoreValue::Code(CodeRef::Block(t)), .. } => {
                        *t = BlockId(first_piece[t.index()])
                    }
                    _ => {}
                }
                nb.insns.push(insn);
            }
            blocks.push(nb);
        }
    }
    let seeds = seeds.iter().map(|&(b, i)| (first_piece[b as usize], i)).collect();
    (Function { name: f.name.clone(), blocks }, seeds)
}

pub(crate) fn normalize(p: &Program) -> Normalized {
    let mut functions = Vec::with_capacity(p.functions.len());
    let mut seeds = Vec::with_capacity(p.functions.len());
    for f in &p.functions {
        let (stripped, s) = strip_function(f);
        let (split, s) = split_function(&stripped, &s);
        functions.push(split);
        seeds.push(s);
    }
    Normalized { program: Program { functions, data: p.data.clone(), entry: p.entry }, seeds }
}
