// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Flattening of a [`Program`] into a linear instruction array.
//!
//! A PC is an index into [`Executable::code`]. Blocks of a function are
//! laid out contiguously in declaration order, so fallthrough is `pc + 1`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    Address, AluOp, BlockId, CodeRef, Cond, FuncId, Op, Operand, Program, Reg, Slot, StoreValue,
    SymbolId, WORD_BYTES,
};

/// First byte address of the data segment.
pub const PRIMARY_BASE: u32 = 0x1000;

/// Byte addresses of the data symbols, packed in declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemoryMap {
    bases: Vec<u32>,
    lens: Vec<u32>,
    words: u32,
}

impl MemoryMap {
    pub fn new(p: &Program) -> MemoryMap {
        let mut bases = Vec::with_capacity(p.data.len());
        let mut lens = Vec::with_capacity(p.data.len());
        let mut words = 0u32;
        for d in &p.data {
            bases.push(PRIMARY_BASE + words * WORD_BYTES);
            lens.push(d.init.len() as u32);
            words += d.init.len() as u32;
        }
        MemoryMap { bases, lens, words }
    }

    pub fn base(&self, sym: SymbolId) -> u32 {
        self.bases[sym.0 as usize]
    }

    pub fn len_words(&self, sym: SymbolId) -> u32 {
        self.lens[sym.0 as usize]
    }

    pub fn addr(&self, sym: SymbolId, offset: i32) -> u32 {
        self.base(sym).wrapping_add(offset as u32)
    }

    /// Words in the data segment.
    pub fn primary_words(&self) -> usize {
        self.words as usize
    }

    /// Index of the data-segment word at byte address `addr`.
    pub fn word_index(&self, addr: u32) -> Option<usize> {
        let off = addr.checked_sub(PRIMARY_BASE)?;
        (off % WORD_BYTES == 0 && off / WORD_BYTES < self.words).then_some((off / WORD_BYTES) as usize)
    }

    /// Word range of `sym` within the data segment.
    pub fn word_range(&self, sym: SymbolId) -> core::ops::Range<usize> {
        let start = ((self.base(sym) - PRIMARY_BASE) / WORD_BYTES) as usize;
        start..start + self.len_words(sym) as usize
    }

    /// Symbol containing the data-segment word at `index`.
    pub fn symbol_of_word(&self, index: usize) -> Option<SymbolId> {
        (0..self.bases.len())
            .map(|i| SymbolId(i as u32))
            .find(|&s| self.word_range(s).contains(&index))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Src {
    Reg(Reg),
    Imm(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemAddr {
    Abs(u32),
    RegOff { base: Reg, offset: i32 },
    Slot(Slot),
}

/// Resolved instruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Insn {
    Alu { op: AluOp, rd: Reg, ra: Reg, rb: Src },
    Mov { rd: Reg, src: Src },
    Load { rd: Reg, addr: MemAddr, bypass: bool },
    Store { value: Src, addr: MemAddr, checkpoint: bool },
    Branch { cond: Cond, ra: Reg, rb: Reg, target: u32 },
    Jump { target: u32 },
    Call { target: u32 },
    Ret,
    Halt,
}

impl Insn {
    pub fn is_store(&self) -> bool {
        matches!(self, Insn::Store { .. })
    }
}

/// Location of a PC in the source program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Location {
    pub func: FuncId,
    pub block: BlockId,
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct Executable {
    pub code: Vec<Insn>,
    pub entry_pc: u32,
    pub map: MemoryMap,
    /// Initial data-segment contents.
    pub data: Vec<u32>,
    pub func_entry: Vec<u32>,
    pub block_pc: Vec<Vec<u32>>,
    /// Set on the first instruction of every region-entry block.
    pub region_start: Vec<bool>,
    /// Region id of each instruction, for reporting.
    pub region_of: Vec<Option<u32>>,
    locations: Vec<Location>,
    labels: Vec<Vec<String>>,
}

impl Executable {
    pub fn link(p: &Program) -> Executable {
        let map = MemoryMap::new(p);
        let mut block_pc = Vec::with_capacity(p.functions.len());
        let mut func_entry = Vec::with_capacity(p.functions.len());
        let mut pc = 0u32;
        for f in &p.functions {
            func_entry.push(pc);
            let mut pcs = Vec::with_capacity(f.blocks.len());
            for b in &f.blocks {
                pcs.push(pc);
                pc += b.insns.len() as u32;
            }
            block_pc.push(pcs);
        }
        let total = pc as usize;
        let mut code = Vec::with_capacity(total);
        let mut locations = Vec::with_capacity(total);
        let mut region_start = vec![false; total];
        let mut region_of = vec![None; total];
        for (fi, f) in p.functions.iter().enumerate() {
            let pcs = &block_pc[fi];
            for (bi, b) in f.blocks.iter().enumerate() {
                if let Some(tag) = b.region {
                    let start = pcs[bi] as usize;
                    if tag.boundary.is_some() {
                        region_start[start] = true;
                    }
                    for slot in &mut region_of[start..start + b.insns.len()] {
                        *slot = Some(tag.region);
                    }
                }
                for (ii, insn) in b.insns.iter().enumerate() {
                    let operand = |o: Operand| match o {
                        Operand::Reg(r) => Src::Reg(r),
                        Operand::Imm(v) => Src::Imm(v as u32),
                        Operand::SymAddr { sym, offset } => Src::Imm(map.addr(sym, offset)),
                    };
                    let address = |a: Address| match a {
                        Address::Sym { sym, offset } => MemAddr::Abs(map.addr(sym, offset)),
                        Address::Reg { base, offset } => MemAddr::RegOff { base, offset },
                        Address::Slot(s) => MemAddr::Slot(s),
                    };
                    let resolved = match insn.op {
                        Op::Alu { op, rd, ra, rb } => Insn::Alu { op, rd, ra, rb: operand(rb) },
                        Op::Mov { rd, src } => Insn::Mov { rd, src: operand(src) },
                        Op::Load { rd, addr } => Insn::Load { rd, addr: address(addr), bypass: insn.bypass },
                        Op::Store { value, addr } => {
                            let value = match value {
                                StoreValue::Reg(r) => Src::Reg(r),
                                StoreValue::Code(CodeRef::Block(b)) => Src::Imm(pcs[b.index()]),
                                StoreValue::Code(CodeRef::Func(g)) => Src::Imm(func_entry[g.0 as usize]),
                            };
                            Insn::Store { value, addr: address(addr), checkpoint: insn.checkpoint }
                        }
                        Op::Branch { cond, ra, rb, target } => {
                            Insn::Branch { cond, ra, rb, target: pcs[target.index()] }
                        }
                        Op::Jump { target } => Insn::Jump { target: pcs[target.index()] },
                        Op::Call { callee } => Insn::Call { target: func_entry[callee.0 as usize] },
                        Op::Ret => Insn::Ret,
                        Op::Halt => Insn::Halt,
                    };
                    code.push(resolved);
                    locations.push(Location { func: FuncId(fi as u32), block: BlockId(bi as u32), index: ii });
                }
            }
        }
        let data = p.data.iter().flat_map(|d| d.init.iter().copied()).collect();
        let labels = p
            .functions
            .iter()
            .map(|f| f.blocks.iter().map(|b| b.label.clone()).collect())
            .collect();
        Executable {
            code,
            entry_pc: func_entry[p.entry.0 as usize],
            map,
            data,
            func_entry,
            block_pc,
            region_start,
            region_of,
            locations,
            labels,
        }
    }

    pub fn location(&self, pc: u32) -> Option<Location> {
        self.locations.get(pc as usize).copied()
    }

    /// `label` or `label+N` for a PC inside a block.
    pub fn describe_pc(&self, pc: u32) -> String {
        match self.location(pc) {
            Some(l) if l.index == 0 => self.labels[l.func.0 as usize][l.block.index()].clone(),
            Some(l) => alloc::format!("{}+{}", self.labels[l.func.0 as usize][l.block.index()], l.index),
            None => alloc::format!("pc{pc}"),
        }
    }

    pub fn is_valid_pc(&self, pc: u32) -> bool {
        (pc as usize) < self.code.len()
    }
}
