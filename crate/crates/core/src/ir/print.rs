// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

use alloc::string::String;
use core::fmt::Write;

use super::{Address, CodeRef, Function, Instruction, Op, Operand, Program, Slot, StoreValue};

/// Renders a program in the text syntax accepted by
/// [`parse_program`](super::parse_program). Region tags become `#region`
/// comments, which the parser ignores.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for d in &p.data {
        let _ = write!(out, "data {} = [", d.name);
        match d.init.first() {
            Some(&first) if d.init.len() > 4 && d.init.iter().all(|&w| w == first) => {
                let _ = write!(out, "{} x {}", first, d.init.len());
            }
            _ => {
                for (i, w) in d.init.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    let _ = write!(out, "{w}");
                }
            }
        }
        out.push_str("]\n");
    }
    for f in &p.functions {
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(out, "fn {} {{", f.name);
        for b in &f.blocks {
            if let Some(tag) = b.region {
                match tag.boundary {
                    Some(kind) => {
                        let _ = writeln!(out, "#region {} {}", tag.region, kind.name());
                    }
                    None => {
                        let _ = writeln!(out, "#in-region {}", tag.region);
                    }
                }
            }
            let _ = writeln!(out, "{}:", b.label);
            for i in &b.insns {
                out.push_str("    ");
                write_insn(&mut out, p, f, i);
                out.push('\n');
            }
        }
        out.push_str("}\n");
    }
    out
}

fn write_operand(out: &mut String, p: &Program, o: Operand) {
    let _ = match o {
        Operand::Reg(r) => write!(out, "{r}"),
        Operand::Imm(v) => write!(out, "{v}"),
        Operand::SymAddr { sym, offset } => {
            let name = &p.data[sym.0 as usize].name;
            match offset {
                0 => write!(out, "&{name}"),
                o if o > 0 => write!(out, "&{name}+{o}"),
                o => write!(out, "&{name}{o}"),
            }
        }
    };
}

fn write_address(out: &mut String, p: &Program, a: Address) {
    let _ = match a {
        Address::Sym { sym, offset } => write!(out, "{}, {}", p.data[sym.0 as usize].name, offset),
        Address::Reg { base, offset: 0 } => write!(out, "[{base}]"),
        Address::Reg { base, offset } if offset > 0 => write!(out, "[{base}+{offset}]"),
        Address::Reg { base, offset } => write!(out, "[{base}{offset}]"),
        Address::Slot(_) => unreachable!("slot addresses print as ckpt"),
    };
}

fn write_insn(out: &mut String, p: &Program, f: &Function, i: &Instruction) {
    let label = |b: super::BlockId| f.blocks[b.index()].label.as_str();
    match i.op {
        Op::Alu { op, rd, ra, rb } => {
            let _ = write!(out, "{} {rd}, {ra}, ", op.mnemonic());
            write_operand(out, p, rb);
        }
        Op::Mov { rd, src } => {
            let _ = write!(out, "mov {rd}, ");
            write_operand(out, p, src);
        }
        Op::Load { rd, addr } => {
            let _ = write!(out, "load{} {rd}, ", if i.bypass { "!bypass" } else { "" });
            write_address(out, p, addr);
        }
        Op::Store { value, addr: Address::Slot(slot) } => {
            let slot_name = match slot {
                Slot::Reg(r) => alloc::format!("{r}"),
                Slot::Pc => String::from("pc"),
            };
            let _ = match value {
                StoreValue::Reg(r) if slot == Slot::Reg(r) => write!(out, "ckpt {slot_name}"),
                StoreValue::Reg(r) => write!(out, "ckpt {slot_name} = {r}"),
                StoreValue::Code(CodeRef::Block(b)) => write!(out, "ckpt {slot_name} = &{}", label(b)),
                StoreValue::Code(CodeRef::Func(g)) => {
                    write!(out, "ckpt {slot_name} = @{}", p.function(g).name)
                }
            };
        }
        Op::Store { value, addr } => {
            let r = match value {
                StoreValue::Reg(r) => r,
                StoreValue::Code(_) => unreachable!("code values are only stored to slots"),
            };
            let _ = write!(out, "store {r}, ");
            write_address(out, p, addr);
        }
        Op::Branch { cond, ra, rb, target } => {
            let _ = write!(out, "{} {ra}, {rb}, {}", cond.mnemonic(), label(target));
        }
        Op::Jump { target } => {
            let _ = write!(out, "jmp {}", label(target));
        }
        Op::Call { callee } => {
            let _ = write!(out, "call {}", p.function(callee).name);
        }
        Op::Ret => out.push_str("ret"),
        Op::Halt => out.push_str("halt"),
    }
}
