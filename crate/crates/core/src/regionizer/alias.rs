// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Flow-insensitive symbol/offset alias analysis for store-buffer bypass.
//!
//! Every register gets one abstract value for the whole program. A base
//! register that only ever holds addresses derived from symbol `S` is
//! assumed to stay inside `S`; accesses through any other register may
//! touch anything. A load is marked when no store of its own region or of
//! any region that can run right before it may touch the same word.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::ir::{
    Address, AluOp, Cfg, FuncId, MemoryMap, Op, Operand, Program, SymbolId, LINK_REG, NUM_REGS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointsTo {
    /// Never written.
    Unset,
    Int,
    Sym(SymbolId),
    Unknown,
}

impl PointsTo {
    fn join(self, other: PointsTo) -> PointsTo {
        match (self, other) {
            (PointsTo::Unset, x) | (x, PointsTo::Unset) => x,
            (a, b) if a == b => a,
            _ => PointsTo::Unknown,
        }
    }
}

/// Words a memory access may touch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Footprint {
    Word(u32),
    InSym(SymbolId),
    /// Checkpoint storage; disjoint from the data segment.
    Slot,
    Any,
}

impl Footprint {
    pub fn may_overlap(self, other: Footprint, map: &MemoryMap) -> bool {
        use Footprint::*;
        let in_sym = |addr: u32, s: SymbolId| {
            map.word_index(addr).is_some_and(|w| map.word_range(s).contains(&w))
        };
        match (self, other) {
            (Slot, Slot) => true,
            (Slot, _) | (_, Slot) => false,
            (Any, _) | (_, Any) => true,
            (Word(a), Word(b)) => a == b,
            (Word(a), InSym(s)) | (InSym(s), Word(a)) => in_sym(a, s),
            (InSym(s), InSym(t)) => s == t,
        }
    }
}

/// Abstract value of every register over all instructions of `p`.
pub fn points_to(p: &Program) -> [PointsTo; NUM_REGS] {
    let mut vals = [PointsTo::Unset; NUM_REGS];
    let operand = |vals: &[PointsTo; NUM_REGS], o: Operand| match o {
        Operand::Reg(r) => vals[r.index()],
        Operand::Imm(_) => PointsTo::Int,
        Operand::SymAddr { sym, .. } => PointsTo::Sym(sym),
    };
    let mut changed = true;
    while changed {
        changed = false;
        for insn in p.functions.iter().flat_map(|f| &f.blocks).flat_map(|b| &b.insns) {
            let (rd, v) = match insn.op {
                Op::Mov { rd, src } => (rd, operand(&vals, src)),
                Op::Alu { op, rd, ra, rb } => {
                    let (a, b) = (vals[ra.index()], operand(&vals, rb));
                    let v = match (op, a, b) {
                        (_, PointsTo::Unset, _) | (_, _, PointsTo::Unset) => PointsTo::Unset,
                        (_, PointsTo::Int, PointsTo::Int) => PointsTo::Int,
                        (AluOp::Add, PointsTo::Sym(s), PointsTo::Int)
                        | (AluOp::Add, PointsTo::Int, PointsTo::Sym(s))
                        | (AluOp::Sub, PointsTo::Sym(s), PointsTo::Int) => PointsTo::Sym(s),
                        (AluOp::Sub, PointsTo::Sym(s), PointsTo::Sym(t)) if s == t => PointsTo::Int,
                        _ => PointsTo::Unknown,
                    };
                    (rd, v)
                }
                Op::Load { rd, .. } => (rd, PointsTo::Unknown),
                Op::Call { .. } => (LINK_REG, PointsTo::Int),
                _ => continue,
            };
            let joined = vals[rd.index()].join(v);
            if joined != vals[rd.index()] {
                vals[rd.index()] = joined;
                changed = true;
            }
        }
    }
    vals
}

pub fn footprint(addr: Address, vals: &[PointsTo; NUM_REGS], map: &MemoryMap) -> Footprint {
    match addr {
        Address::Sym { sym, offset } => Footprint::Word(map.addr(sym, offset)),
        Address::Reg { base, .. } => match vals[base.index()] {
            PointsTo::Sym(s) => Footprint::InSym(s),
            _ => Footprint::Any,
        },
        Address::Slot(_) => Footprint::Slot,
    }
}

/// Static bypass statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BypassStats {
    pub loads: usize,
    pub bypassed: usize,
}

impl BypassStats {
    pub fn rate(&self) -> f64 {
        if self.loads == 0 {
            0.0
        } else {
            self.bypassed as f64 / self.loads as f64
        }
    }
}

/// For every region, the regions that may execute immediately before it.
pub fn region_predecessors(p: &Program, region_count: usize) -> Vec<BTreeSet<u32>> {
    let mut preds = vec![BTreeSet::new(); region_count];
    let region_at = |f: FuncId, b: usize| p.function(f).blocks[b].region.map(|t| t.region);
    // Continuation region of every call site, per callee.
    let mut continuations: Vec<Vec<u32>> = vec![Vec::new(); p.functions.len()];
    for (fi, f) in p.functions.iter().enumerate() {
        for (bi, b) in f.blocks.iter().enumerate() {
            if b.region.is_none() {
                continue;
            }
            if let Some(Op::Call { callee }) = b.insns.last().map(|i| i.op) {
                if let Some(r) = region_at(FuncId(fi as u32), bi + 1) {
                    continuations[callee.0 as usize].push(r);
                }
            }
        }
    }
    for (fi, f) in p.functions.iter().enumerate() {
        let cfg = Cfg::build(f);
        for (bi, b) in f.blocks.iter().enumerate() {
            let Some(tag) = b.region else { continue };
            let from = tag.region;
            match b.insns.last().map(|i| i.op) {
                Some(Op::Call { callee }) => {
                    if let Some(r) = region_at(callee, 0) {
                        preds[r as usize].insert(from);
                    }
                    continue;
                }
                Some(Op::Ret) => {
                    for &r in &continuations[fi] {
                        preds[r as usize].insert(from);
                    }
                    continue;
                }
                _ => {}
            }
            for s in &cfg.succs[bi] {
                let Some(to) = f.blocks[s.index()].region else { continue };
                if to.boundary.is_some() {
                    preds[to.region as usize].insert(from);
                }
            }
        }
    }
    preds
}

/// Sets `bypass` on every load proven disjoint from the stores it could
/// meet in the store buffer. Expects region tags to be present.
pub fn mark_bypass_loads(p: &mut Program) -> BypassStats {
    let map = p.memory_map();
    let vals = points_to(p);
    let region_count = p
        .functions
        .iter()
        .flat_map(|f| &f.blocks)
        .filter_map(|b| b.region.map(|t| t.region as usize + 1))
        .max()
        .unwrap_or(0);
    let preds = region_predecessors(p, region_count);
    let mut stores: Vec<Vec<Footprint>> = vec![Vec::new(); region_count];
    for b in p.functions.iter().flat_map(|f| &f.blocks) {
        let Some(tag) = b.region else { continue };
        for insn in &b.insns {
            if let Op::Store { addr, .. } = insn.op {
                let fp = footprint(addr, &vals, &map);
                if fp != Footprint::Slot {
                    stores[tag.region as usize].push(fp);
                }
            }
        }
    }
    let mut stats = BypassStats::default();
    for f in &mut p.functions {
        for b in &mut f.blocks {
            let tag = b.region;
            for insn in &mut b.insns {
                let Op::Load { addr, .. } = insn.op else { continue };
                stats.loads += 1;
                insn.bypass = false;
                let Some(tag) = tag else { continue };
                let fp = footprint(addr, &vals, &map);
                let r = tag.region as usize;
                let scope = core::iter::once(r).chain(preds[r].iter().map(|&q| q as usize));
                let clear = scope.flat_map(|q| stores[q].iter()).all(|s| !fp.may_overlap(*s, &map));
                if clear {
                    insn.bypass = true;
                    stats.bypassed += 1;
                }
            }
        }
    }
    stats
}
