// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Random program generator and brute-force oracles over linked code.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write;
use std::fs;
use std::path::PathBuf;

use icsim_core::ir::{Executable, Insn, MemAddr, Src, LINK_REG, NUM_REGS};
use proptest::prelude::*;

pub fn corpus() -> Vec<(String, String)> {
    // resolves from this crate and from crates that include this module
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/corpus");
    let mut out: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "ir"))
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    out
}

// ---- generator ----

#[derive(Clone, Debug)]
pub enum Stmt {
    Alu { op: &'static str, rd: u8, ra: u8, rb: Option<u8>, imm: u32 },
    Store { rs: u8, sym: u8, word: u8 },
    Load { rd: u8, sym: u8, word: u8 },
    /// Read-modify-write of one word through r7.
    Bump { sym: u8, word: u8 },
    /// Store through a pointer into `b`.
    Indexed { rs: u8, word: u8, load: bool },
    If { ra: u8, rb: u8, body: Vec<Stmt> },
    Loop { trips: u8, body: Vec<Stmt> },
    Call,
}

const SYMS: [&str; 3] = ["a", "b", "out"];
const WORDS: u8 = 8;

fn data_reg() -> impl Strategy<Value = u8> {
    1u8..=6
}

fn leaf() -> impl Strategy<Value = Stmt> {
    let alu = (
        prop::sample::select(vec!["add", "sub", "xor", "mul", "shl", "shr", "or", "slt"]),
        data_reg(),
        data_reg(),
        prop::option::of(data_reg()),
        0u32..64,
    )
        .prop_map(|(op, rd, ra, rb, imm)| Stmt::Alu { op, rd, ra, rb, imm });
    prop_oneof![
        3 => alu,
        3 => (data_reg(), 0u8..3, 0..WORDS).prop_map(|(rs, sym, word)| Stmt::Store { rs, sym, word }),
        2 => (data_reg(), 0u8..3, 0..WORDS).prop_map(|(rd, sym, word)| Stmt::Load { rd, sym, word }),
        2 => (0u8..3, 0..WORDS).prop_map(|(sym, word)| Stmt::Bump { sym, word }),
        1 => (data_reg(), 0..WORDS, any::<bool>()).prop_map(|(rs, word, load)| Stmt::Indexed { rs, word, load }),
    ]
}

fn block(depth: u32, with_calls: bool) -> BoxedStrategy<Vec<Stmt>> {
    let base = if with_calls {
        prop_oneof![9 => leaf(), 1 => Just(Stmt::Call)].boxed()
    } else {
        leaf().boxed()
    };
    if depth == 0 {
        return prop::collection::vec(base, 1..6).boxed();
    }
    let inner = block(depth - 1, with_calls);
    let compound = prop_oneof![
        (data_reg(), data_reg(), inner.clone()).prop_map(|(ra, rb, body)| Stmt::If { ra, rb, body }),
        (1u8..4, inner).prop_map(|(trips, body)| Stmt::Loop { trips, body }),
    ];
    prop::collection::vec(prop_oneof![4 => base, 1 => compound], 1..8).boxed()
}

/// Terminating programs over three symbols with loops, diamonds and an
/// optional leaf helper.
pub fn program(with_calls: bool) -> impl Strategy<Value = String> {
    (block(2, with_calls), block(0, false), prop::collection::vec(0u32..100, WORDS as usize))
        .prop_map(move |(main, helper, init)| render(&main, with_calls.then_some(&helper[..]), &init))
}

struct Emitter {
    out: String,
    labels: usize,
    loop_depth: usize,
}

impl Emitter {
    fn label(&mut self, prefix: &str) -> String {
        self.labels += 1;
        format!("{prefix}{}", self.labels)
    }

    fn start(&mut self, label: &str) {
        // a block must not be empty, so every label gets a harmless def
        let _ = writeln!(self.out, "{label}: mov r9, {}", self.labels);
    }

    fn stmts(&mut self, body: &[Stmt]) {
        for s in body {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        let o = &mut self.out;
        match s {
            Stmt::Alu { op, rd, ra, rb: Some(rb), .. } => {
                let _ = writeln!(o, "    {op} r{rd}, r{ra}, r{rb}");
            }
            Stmt::Alu { op, rd, ra, rb: None, imm } => {
                let _ = writeln!(o, "    {op} r{rd}, r{ra}, {imm}");
            }
            Stmt::Store { rs, sym, word } => {
                let _ = writeln!(o, "    store r{rs}, {}, {}", SYMS[*sym as usize], 4 * word);
            }
            Stmt::Load { rd, sym, word } => {
                let _ = writeln!(o, "    load r{rd}, {}, {}", SYMS[*sym as usize], 4 * word);
            }
            Stmt::Bump { sym, word } => {
                let (sym, off) = (SYMS[*sym as usize], 4 * word);
                let _ = writeln!(o, "    load r7, {sym}, {off}\n    add r7, r7, 1\n    store r7, {sym}, {off}");
            }
            Stmt::Indexed { rs, word, load } => {
                let _ = writeln!(o, "    mov r13, &b");
                let _ = writeln!(o, "    add r13, r13, {}", 4 * word);
                let op = if *load { "load" } else { "store" };
                let _ = writeln!(o, "    {op} r{rs}, [r13]");
            }
            Stmt::If { ra, rb, body } => {
                let skip = self.label("S");
                let then = self.label("T");
                let _ = writeln!(self.out, "    bge r{ra}, r{rb}, {skip}");
                self.start(&then);
                self.stmts(body);
                self.start(&skip);
            }
            Stmt::Loop { trips, body } => {
                if self.loop_depth >= 2 {
                    // counters r10 and r11 are taken
                    self.stmts(body);
                    return;
                }
                let counter = 10 + self.loop_depth;
                let head = self.label("H");
                let after = self.label("X");
                let _ = writeln!(self.out, "    mov r{counter}, 0");
                self.start(&head);
                self.loop_depth += 1;
                self.stmts(body);
                self.loop_depth -= 1;
                let _ = writeln!(self.out, "    add r{counter}, r{counter}, 1");
                let _ = writeln!(self.out, "    mov r12, {trips}");
                let _ = writeln!(self.out, "    bne r{counter}, r12, {head}");
                self.start(&after);
            }
            Stmt::Call => {
                let _ = writeln!(o, "    call h");
            }
        }
    }
}

pub fn render(main: &[Stmt], helper: Option<&[Stmt]>, init: &[u32]) -> String {
    let words: Vec<String> = init.iter().map(|w| w.to_string()).collect();
    let mut e = Emitter { out: String::new(), labels: 0, loop_depth: 0 };
    let _ = writeln!(e.out, "data a = [{}]\ndata b = [0 x {WORDS}]\ndata out = [0 x {WORDS}]\n", words.join(", "));
    let _ = writeln!(e.out, "fn main {{");
    e.start("E");
    e.stmts(main);
    let _ = writeln!(e.out, "    halt\n}}");
    if let Some(helper) = helper {
        let _ = writeln!(e.out, "\nfn h {{");
        e.start("HE");
        // the helper is a leaf and must not touch the loop counters
        e.loop_depth = 2;
        e.stmts(helper);
        let _ = writeln!(e.out, "    ret\n}}");
    }
    e.out
}

// ---- oracles over linked code ----

fn src_uses(s: Src, r: usize) -> bool {
    matches!(s, Src::Reg(x) if x.index() == r)
}

fn addr_uses(a: MemAddr, r: usize) -> bool {
    matches!(a, MemAddr::RegOff { base, .. } if base.index() == r)
}

/// (reads `r`, writes `r`) for one instruction.
pub fn use_def(insn: &Insn, r: usize) -> (bool, bool) {
    match *insn {
        Insn::Alu { rd, ra, rb, .. } => (ra.index() == r || src_uses(rb, r), rd.index() == r),
        Insn::Mov { rd, src } => (src_uses(src, r), rd.index() == r),
        Insn::Load { rd, addr, .. } => (addr_uses(addr, r), rd.index() == r),
        Insn::Store { value, addr, .. } => (src_uses(value, r) || addr_uses(addr, r), false),
        Insn::Branch { ra, rb, .. } => (ra.index() == r || rb.index() == r, false),
        Insn::Call { .. } => (false, r == LINK_REG.index()),
        Insn::Ret => (r == LINK_REG.index(), false),
        Insn::Jump { .. } | Insn::Halt => (false, false),
    }
}

/// Instructions following each `call` to the function at `entry`.
pub fn return_sites(exe: &Executable, entry: u32) -> Vec<u32> {
    exe.code
        .iter()
        .enumerate()
        .filter(|(_, i)| matches!(i, Insn::Call { target } if *target == entry))
        .map(|(pc, _)| pc as u32 + 1)
        .collect()
}

fn function_entry(exe: &Executable, pc: u32) -> u32 {
    exe.func_entry[exe.location(pc).unwrap().func.0 as usize]
}

/// Whether `r` may be read before written on some call-matched path from
/// `pc`. A `ret` with no pending call may go to any return site. Reads by
/// checkpoint stores do not count: a register only has to survive a power
/// failure if the program itself needs it later.
pub fn live_at(exe: &Executable, pc: u32, r: usize) -> bool {
    let mut seen: HashSet<(u32, Vec<u32>)> = HashSet::new();
    let mut work = vec![(pc, Vec::<u32>::new())];
    while let Some((pc, stack)) = work.pop() {
        if !seen.insert((pc, stack.clone())) {
            continue;
        }
        let insn = exe.code[pc as usize];
        let (uses, defs) = match insn {
            Insn::Store { addr: MemAddr::Slot(_), .. } => (false, false),
            _ => use_def(&insn, r),
        };
        if uses {
            return true;
        }
        if defs {
            continue;
        }
        match insn {
            Insn::Branch { target, .. } => {
                work.push((target, stack.clone()));
                work.push((pc + 1, stack));
            }
            Insn::Jump { target } => work.push((target, stack)),
            Insn::Call { target } => {
                let mut s = stack;
                s.push(pc + 1);
                work.push((target, s));
            }
            Insn::Ret => {
                let mut s = stack;
                match s.pop() {
                    Some(ret) => work.push((ret, s)),
                    None => {
                        for site in return_sites(exe, function_entry(exe, pc)) {
                            work.push((site, Vec::new()));
                        }
                    }
                }
            }
            Insn::Halt => {}
            _ => work.push((pc + 1, stack)),
        }
    }
    false
}

pub fn live_set(exe: &Executable, pc: u32) -> BTreeSet<usize> {
    (0..NUM_REGS).filter(|&r| live_at(exe, pc, r)).collect()
}

/// Most stores on any path from a region start to the next boundary.
pub fn max_path_stores(exe: &Executable, start: u32) -> usize {
    fn walk(exe: &Executable, pc: u32, start: u32, depth: usize) -> usize {
        assert!(depth < 10_000, "cycle inside the region starting at {}", exe.describe_pc(start));
        if depth > 0 && exe.region_start[pc as usize] {
            return 0;
        }
        let insn = exe.code[pc as usize];
        let here = insn.is_store() as usize;
        let rest = match insn {
            Insn::Branch { target, .. } => {
                walk(exe, target, start, depth + 1).max(walk(exe, pc + 1, start, depth + 1))
            }
            Insn::Jump { target } => walk(exe, target, start, depth + 1),
            // callee entries and return points start new regions
            Insn::Call { .. } | Insn::Ret | Insn::Halt => 0,
            _ => walk(exe, pc + 1, start, depth + 1),
        };
        here + rest
    }
    walk(exe, start, start, 0)
}

/// One run of checkpoint stores ending at a region exit.
#[derive(Debug)]
pub struct Exit {
    pub pc: u32,
    pub saved: BTreeSet<usize>,
    /// `None` for `ckpt pc = r14` before a `ret`.
    pub target: Option<u32>,
}

pub fn exits(exe: &Executable) -> Vec<Exit> {
    use icsim_core::ir::Slot;
    let mut out = Vec::new();
    let mut saved = BTreeSet::new();
    for (pc, insn) in exe.code.iter().enumerate() {
        match *insn {
            Insn::Store { addr: MemAddr::Slot(Slot::Reg(r)), .. } => {
                saved.insert(r.index());
            }
            Insn::Store { value, addr: MemAddr::Slot(Slot::Pc), .. } => {
                let target = match value {
                    Src::Imm(t) => Some(t),
                    Src::Reg(_) => None,
                };
                out.push(Exit { pc: pc as u32, saved: std::mem::take(&mut saved), target });
            }
            _ => assert!(saved.is_empty(), "register checkpoint without a pc checkpoint at {pc}"),
        }
    }
    out
}

/// Registers that must be saved at `exit`, by the path oracle.
pub fn needed_at(exe: &Executable, exit: &Exit) -> BTreeSet<usize> {
    match exit.target {
        Some(t) => live_set(exe, t),
        None => return_sites(exe, function_entry(exe, exit.pc))
            .into_iter()
            .flat_map(|s| live_set(exe, s))
            .collect(),
    }
}

/// Runs linked code on an ideal machine and checks every bypassed load
/// against the words stored by the current and the previous dynamic
/// region. Returns (loads, bypassed loads).
pub fn check_bypass_dynamically(exe: &Executable, budget: u64) -> Result<(u64, u64), String> {
    let mut mem = exe.data.clone();
    let mut regs = [0u32; NUM_REGS];
    let mut pc = exe.entry_pc;
    let mut current: HashSet<usize> = HashSet::new();
    let mut previous: HashSet<usize> = HashSet::new();
    let (mut loads, mut bypassed) = (0u64, 0u64);
    let val = |regs: &[u32; NUM_REGS], s: Src| match s {
        Src::Reg(r) => regs[r.index()],
        Src::Imm(v) => v,
    };
    for _ in 0..budget {
        if exe.region_start[pc as usize] {
            previous = std::mem::take(&mut current);
        }
        let word = |regs: &[u32; NUM_REGS], a: MemAddr| match a {
            MemAddr::Abs(x) => exe.map.word_index(x),
            MemAddr::RegOff { base, offset } => exe.map.word_index(regs[base.index()].wrapping_add(offset as u32)),
            MemAddr::Slot(_) => None,
        };
        let mut next = pc + 1;
        match exe.code[pc as usize] {
            Insn::Alu { op, rd, ra, rb } => regs[rd.index()] = op.eval(regs[ra.index()], val(&regs, rb)),
            Insn::Mov { rd, src } => regs[rd.index()] = val(&regs, src),
            Insn::Load { rd, addr, bypass } => {
                let w = word(&regs, addr).ok_or("load out of range")?;
                loads += 1;
                if bypass {
                    bypassed += 1;
                    if current.contains(&w) || previous.contains(&w) {
                        return Err(format!("bypassed load at {} reads a buffered word", exe.describe_pc(pc)));
                    }
                }
                regs[rd.index()] = mem[w];
            }
            Insn::Store { value, addr, .. } => {
                if let Some(w) = word(&regs, addr) {
                    mem[w] = val(&regs, value);
                    current.insert(w);
                }
            }
            Insn::Branch { cond, ra, rb, target } => {
                if cond.holds(regs[ra.index()], regs[rb.index()]) {
                    next = target;
                }
            }
            Insn::Jump { target } => next = target,
            Insn::Call { target } => {
                regs[LINK_REG.index()] = pc + 1;
                next = target;
            }
            Insn::Ret => next = regs[LINK_REG.index()],
            Insn::Halt => return Ok((loads, bypassed)),
        }
        pc = next;
    }
    Err("budget exhausted".into())
}
