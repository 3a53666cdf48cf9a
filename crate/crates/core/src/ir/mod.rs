// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Word-addressed register IR.
//!
//! Programs are a set of functions over sixteen 32-bit registers plus a
//! data segment that is preloaded into nonvolatile memory. All memory
//! operands are byte addresses of 4-byte words. `call` writes the return
//! address into the link register `r14`; `ret` jumps through it, so a
//! function that calls another must spill `r14` itself.

mod cfg;
mod interp;
mod link;
mod liveness;
mod parse;
mod print;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use cfg::Cfg;
pub use interp::{interpret_reference, reference_loads, word_addr, GoldenState};
pub use link::{Executable, Insn, Location, MemAddr, MemoryMap, Src, PRIMARY_BASE};
pub use liveness::{function_liveness, FunctionLiveness, ProgramLiveness, Summary};
pub use parse::parse_program;
pub use print::print_program;

use crate::error::ParseError;

pub const NUM_REGS: usize = 16;
pub const WORD_BYTES: u32 = 4;
/// Receives the return address on `call`.
pub const LINK_REG: Reg = Reg(14);
/// Name of the data symbol whose final contents form the program output.
pub const OUTPUT_SYMBOL: &str = "out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Reg(u8);

impl Reg {
    pub fn new(index: u8) -> Option<Reg> {
        ((index as usize) < NUM_REGS).then_some(Reg(index))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = Reg> {
        (0..NUM_REGS as u8).map(Reg)
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// Bit set over the sixteen architectural registers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegSet(u16);

impl RegSet {
    pub const EMPTY: RegSet = RegSet(0);
    pub const ALL: RegSet = RegSet(u16::MAX);

    pub fn from_bits(bits: u16) -> RegSet {
        RegSet(bits)
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn single(r: Reg) -> RegSet {
        RegSet(1 << r.0)
    }

    pub fn contains(self, r: Reg) -> bool {
        self.0 & (1 << r.0) != 0
    }

    pub fn insert(&mut self, r: Reg) {
        self.0 |= 1 << r.0;
    }

    pub fn remove(&mut self, r: Reg) {
        self.0 &= !(1 << r.0);
    }

    pub fn union(self, other: RegSet) -> RegSet {
        RegSet(self.0 | other.0)
    }

    pub fn intersect(self, other: RegSet) -> RegSet {
        RegSet(self.0 & other.0)
    }

    pub fn minus(self, other: RegSet) -> RegSet {
        RegSet(self.0 & !other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Ascending register order.
    pub fn iter(self) -> impl Iterator<Item = Reg> {
        Reg::all().filter(move |r| self.contains(*r))
    }
}

impl FromIterator<Reg> for RegSet {
    fn from_iter<I: IntoIterator<Item = Reg>>(iter: I) -> Self {
        let mut s = RegSet::EMPTY;
        for r in iter {
            s.insert(r);
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FuncId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub u32);

impl BlockId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AluOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Shl,
    Shr,
    Slt,
    Sltu,
    Seq,
}

impl AluOp {
    pub const ALL: [AluOp; 11] = [
        AluOp::Add,
        AluOp::Sub,
        AluOp::Mul,
        AluOp::And,
        AluOp::Or,
        AluOp::Xor,
        AluOp::Shl,
        AluOp::Shr,
        AluOp::Slt,
        AluOp::Sltu,
        AluOp::Seq,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            AluOp::Add => "add",
            AluOp::Sub => "sub",
            AluOp::Mul => "mul",
            AluOp::And => "and",
            AluOp::Or => "or",
            AluOp::Xor => "xor",
            AluOp::Shl => "shl",
            AluOp::Shr => "shr",
            AluOp::Slt => "slt",
            AluOp::Sltu => "sltu",
            AluOp::Seq => "seq",
        }
    }

    pub fn eval(self, a: u32, b: u32) -> u32 {
        match self {
            AluOp::Add => a.wrapping_add(b),
            AluOp::Sub => a.wrapping_sub(b),
            AluOp::Mul => a.wrapping_mul(b),
            AluOp::And => a & b,
            AluOp::Or => a | b,
            AluOp::Xor => a ^ b,
            AluOp::Shl => a.wrapping_shl(b & 31),
            AluOp::Shr => a.wrapping_shr(b & 31),
            AluOp::Slt => ((a as i32) < (b as i32)) as u32,
            AluOp::Sltu => (a < b) as u32,
            AluOp::Seq => (a == b) as u32,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cond {
    Eq,
    Ne,
    Lt,
    Ge,
    Ltu,
    Geu,
}

impl Cond {
    pub const ALL: [Cond; 6] = [Cond::Eq, Cond::Ne, Cond::Lt, Cond::Ge, Cond::Ltu, Cond::Geu];

    pub fn mnemonic(self) -> &'static str {
        match self {
            Cond::Eq => "beq",
            Cond::Ne => "bne",
            Cond::Lt => "blt",
            Cond::Ge => "bge",
            Cond::Ltu => "bltu",
            Cond::Geu => "bgeu",
        }
    }

    pub fn holds(self, a: u32, b: u32) -> bool {
        match self {
            Cond::Eq => a == b,
            Cond::Ne => a != b,
            Cond::Lt => (a as i32) < (b as i32),
            Cond::Ge => (a as i32) >= (b as i32),
            Cond::Ltu => a < b,
            Cond::Geu => a >= b,
        }
    }
}

/// Second source of an ALU op or the source of a `mov`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Reg(Reg),
    Imm(i32),
    /// Address of a data symbol plus a byte offset (`&sym+8`).
    SymAddr { sym: SymbolId, offset: i32 },
}

/// Checkpoint storage slot in NVM.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Reg(Reg),
    Pc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Address {
    /// `sym, offset`
    Sym { sym: SymbolId, offset: i32 },
    /// `[base+offset]`
    Reg { base: Reg, offset: i32 },
    /// Only produced by checkpoint stores.
    Slot(Slot),
}

/// Code address stored by checkpoint instructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CodeRef {
    Block(BlockId),
    Func(FuncId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StoreValue {
    Reg(Reg),
    Code(CodeRef),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Alu { op: AluOp, rd: Reg, ra: Reg, rb: Operand },
    Mov { rd: Reg, src: Operand },
    Load { rd: Reg, addr: Address },
    Store { value: StoreValue, addr: Address },
    /// Falls through to the next block when the condition is false.
    Branch { cond: Cond, ra: Reg, rb: Reg, target: BlockId },
    Jump { target: BlockId },
    Call { callee: FuncId },
    Ret,
    Halt,
}

impl Op {
    /// Ends a block in source text; `call` may appear mid-block.
    pub fn is_terminator(&self) -> bool {
        matches!(self, Op::Branch { .. } | Op::Jump { .. } | Op::Ret | Op::Halt)
    }

    pub fn falls_through(&self) -> bool {
        !matches!(self, Op::Jump { .. } | Op::Ret | Op::Halt)
    }

    pub fn is_store(&self) -> bool {
        matches!(self, Op::Store { .. })
    }

    pub fn is_load(&self) -> bool {
        matches!(self, Op::Load { .. })
    }

    pub fn def(&self) -> Option<Reg> {
        match *self {
            Op::Alu { rd, .. } | Op::Mov { rd, .. } | Op::Load { rd, .. } => Some(rd),
            Op::Call { .. } => Some(LINK_REG),
            _ => None,
        }
    }

    /// Registers read by the instruction itself. Calls are handled by the
    /// callee summary, and `ret` reads the link register.
    pub fn uses(&self) -> RegSet {
        fn operand(o: Operand) -> RegSet {
            match o {
                Operand::Reg(r) => RegSet::single(r),
                _ => RegSet::EMPTY,
            }
        }
        fn address(a: Address) -> RegSet {
            match a {
                Address::Reg { base, .. } => RegSet::single(base),
                _ => RegSet::EMPTY,
            }
        }
        match *self {
            Op::Alu { ra, rb, .. } => RegSet::single(ra).union(operand(rb)),
            Op::Mov { src, .. } => operand(src),
            Op::Load { addr, .. } => address(addr),
            Op::Store { value, addr } => {
                let v = match value {
                    StoreValue::Reg(r) => RegSet::single(r),
                    StoreValue::Code(_) => RegSet::EMPTY,
                };
                v.union(address(addr))
            }
            Op::Branch { ra, rb, .. } => RegSet::single(ra).union(RegSet::single(rb)),
            Op::Ret => RegSet::single(LINK_REG),
            Op::Jump { .. } | Op::Call { .. } | Op::Halt => RegSet::EMPTY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub op: Op,
    /// Load proven not to alias any store-buffer entry it could meet.
    pub bypass: bool,
    /// Inserted by the regionizer.
    pub checkpoint: bool,
}

impl Instruction {
    pub fn new(op: Op) -> Instruction {
        Instruction { op, bypass: false, checkpoint: false }
    }

    pub fn checkpoint(op: Op) -> Instruction {
        Instruction { op, bypass: false, checkpoint: true }
    }
}

/// Why a region starts at a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BoundaryKind {
    FunctionEntry,
    /// Where control comes back after a callee's exit.
    FunctionExit,
    LoopHeader,
    StoreBudgetCut,
    /// Merge of paths that arrive from different regions.
    Join,
}

impl BoundaryKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryKind::FunctionEntry => "function-entry",
            BoundaryKind::FunctionExit => "function-exit",
            BoundaryKind::LoopHeader => "loop-header",
            BoundaryKind::StoreBudgetCut => "store-budget-cut",
            BoundaryKind::Join => "join",
        }
    }
}

/// Region membership of a block, filled in by the regionizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RegionTag {
    pub region: u32,
    /// Set on the block a region starts at.
    pub boundary: Option<BoundaryKind>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicBlock {
    pub label: String,
    pub insns: Vec<Instruction>,
    pub region: Option<RegionTag>,
}

impl BasicBlock {
    pub fn new(label: impl Into<String>) -> BasicBlock {
        BasicBlock { label: label.into(), insns: Vec::new(), region: None }
    }

    pub fn terminator(&self) -> Option<&Op> {
        self.insns.last().map(|i| &i.op).filter(|op| op.is_terminator())
    }

    pub fn falls_through(&self) -> bool {
        self.insns.last().is_none_or(|i| i.op.falls_through())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    /// `blocks[0]` is the entry; fallthrough follows vector order.
    pub blocks: Vec<BasicBlock>,
}

impl Function {
    pub fn block_by_label(&self, label: &str) -> Option<BlockId> {
        self.blocks.iter().position(|b| b.label == label).map(|i| BlockId(i as u32))
    }

    pub fn block(&self, id: BlockId) -> &BasicBlock {
        &self.blocks[id.index()]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataSymbol {
    pub name: String,
    pub init: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub functions: Vec<Function>,
    pub data: Vec<DataSymbol>,
    pub entry: FuncId,
}

impl Program {
    pub fn function(&self, id: FuncId) -> &Function {
        &self.functions[id.0 as usize]
    }

    pub fn function_by_name(&self, name: &str) -> Option<FuncId> {
        self.functions.iter().position(|f| f.name == name).map(|i| FuncId(i as u32))
    }

    pub fn symbol_by_name(&self, name: &str) -> Option<SymbolId> {
        self.data.iter().position(|d| d.name == name).map(|i| SymbolId(i as u32))
    }

    pub fn output_symbol(&self) -> Option<SymbolId> {
        self.symbol_by_name(OUTPUT_SYMBOL)
    }

    pub fn memory_map(&self) -> MemoryMap {
        MemoryMap::new(self)
    }

    /// Functions reachable through calls from `f`, in call order.
    pub fn callees(&self, f: FuncId) -> Vec<FuncId> {
        let mut out = Vec::new();
        for b in &self.function(f).blocks {
            for i in &b.insns {
                if let Op::Call { callee } = i.op {
                    if !out.contains(&callee) {
                        out.push(callee);
                    }
                }
            }
        }
        out
    }

    /// Callees before callers. Fails on recursion.
    pub fn bottom_up_order(&self) -> Result<Vec<FuncId>, ParseError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let n = self.functions.len();
        let mut mark = alloc::vec![Mark::New; n];
        let mut order = Vec::with_capacity(n);
        for root in 0..n {
            if mark[root] != Mark::New {
                continue;
            }
            let mut stack: Vec<(FuncId, usize)> = alloc::vec![(FuncId(root as u32), 0)];
            mark[root] = Mark::Active;
            while let Some(&mut (f, ref mut next)) = stack.last_mut() {
                let callees = self.callees(f);
                if *next < callees.len() {
                    let c = callees[*next];
                    *next += 1;
                    match mark[c.0 as usize] {
                        Mark::New => {
                            mark[c.0 as usize] = Mark::Active;
                            stack.push((c, 0));
                        }
                        Mark::Active => {
                            return Err(ParseError::Recursion {
                                function: self.function(c).name.clone(),
                            })
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[f.0 as usize] = Mark::Done;
                    order.push(f);
                    stack.pop();
                }
            }
        }
        Ok(order)
    }

    /// Structural checks shared by the parser and the regionizer output.
    pub fn validate(&self) -> Result<(), ParseError> {
        for f in &self.functions {
            if f.blocks.is_empty() {
                return Err(ParseError::EmptyFunction { function: f.name.clone() });
            }
            if f.blocks.last().is_some_and(|b| b.falls_through()) {
                return Err(ParseError::FallsOffEnd { function: f.name.clone() });
            }
        }
        self.bottom_up_order()?;
        Ok(())
    }

    pub fn instruction_count(&self) -> usize {
        self.functions.iter().flat_map(|f| &f.blocks).map(|b| b.insns.len()).sum()
    }
}
