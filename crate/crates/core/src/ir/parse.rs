// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Text front end. The grammar is described in `docs/ir.md`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{
    AluOp, Address, BasicBlock, BlockId, CodeRef, Cond, DataSymbol, FuncId, Function, Instruction,
    Op, Operand, Program, Reg, Slot, StoreValue, SymbolId, OUTPUT_SYMBOL, WORD_BYTES,
};
use crate::error::ParseError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(i64),
    Punct(char),
    /// Newline or `;`.
    Sep,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, msg: msg.into() }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '.'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        match c {
            '\n' => {
                out.push(Token { tok: Tok::Sep, line });
                line += 1;
                chars.next();
            }
            ';' => {
                out.push(Token { tok: Tok::Sep, line });
                chars.next();
            }
            '#' => {
                while chars.peek().is_some_and(|&(_, c)| c != '\n') {
                    chars.next();
                }
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            c if c.is_ascii_digit() => {
                let mut end = start;
                while let Some(&(i, c)) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        end = i + c.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                let lit = text[start..end].replace('_', "");
                let value = if let Some(hex) = lit.strip_prefix("0x").or(lit.strip_prefix("0X")) {
                    i64::from_str_radix(hex, 16)
                } else {
                    lit.parse::<i64>()
                };
                let value = value.map_err(|_| syntax(line, format!("bad number `{lit}`")))?;
                if value > u32::MAX as i64 {
                    return Err(syntax(line, format!("number `{lit}` does not fit in 32 bits")));
                }
                out.push(Token { tok: Tok::Num(value), line });
            }
            c if is_ident_start(c) => {
                let mut end = start;
                while let Some(&(i, c)) = chars.peek() {
                    if is_ident_char(c) {
                        end = i + c.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Token { tok: Tok::Ident(text[start..end].to_string()), line });
            }
            '{' | '}' | '[' | ']' | ',' | ':' | '=' | '&' | '@' | '+' | '-' | '!' => {
                out.push(Token { tok: Tok::Punct(c), line });
                chars.next();
            }
            other => return Err(syntax(line, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

/// Unresolved reference patched once the whole function or program is seen.
struct LabelFixup {
    block: usize,
    insn: usize,
    label: String,
    line: usize,
}

struct ImplicitOutput {
    id: SymbolId,
    words: usize,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    symbols: BTreeMap<String, SymbolId>,
    functions: BTreeMap<String, FuncId>,
    data: Vec<Option<DataSymbol>>,
    implicit_out: Option<ImplicitOutput>,
}

/// Parses IR text into a validated [`Program`].
///
/// Functions and data symbols may be referenced before they are declared.
/// A program that stores to `out` without declaring it gets an implicit
/// `out` symbol just large enough for its constant offsets.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        symbols: BTreeMap::new(),
        functions: BTreeMap::new(),
        data: Vec::new(),
        implicit_out: None,
    };
    p.declare_items()?;
    let mut functions: Vec<Option<Function>> = alloc::vec![None; p.functions.len()];
    loop {
        p.skip_seps();
        let Some(t) = p.peek().cloned() else { break };
        match &t.tok {
            Tok::Ident(kw) if kw == "data" => {
                p.pos += 1;
                let name = p.ident()?;
                p.expect('=')?;
                let init = p.word_list()?;
                let id = p.symbols[&name];
                p.data[id.0 as usize] = Some(DataSymbol { name, init });
            }
            Tok::Ident(kw) if kw == "fn" => {
                p.pos += 1;
                let name = p.ident()?;
                let id = p.functions[&name];
                functions[id.0 as usize] = Some(p.function_body(name)?);
            }
            _ => return Err(syntax(t.line, "expected `data` or `fn`")),
        }
    }
    if let Some(out) = &p.implicit_out {
        p.data[out.id.0 as usize] = Some(DataSymbol {
            name: OUTPUT_SYMBOL.to_string(),
            init: alloc::vec![0; out.words.max(1)],
        });
    }
    let entry = *p.functions.get("main").ok_or(ParseError::NoEntry)?;
    let program = Program {
        functions: functions.into_iter().map(|f| f.expect("declared function parsed")).collect(),
        data: p.data.into_iter().map(|d| d.expect("declared symbol parsed")).collect(),
        entry,
    };
    program.validate()?;
    Ok(program)
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn line(&self) -> usize {
        self.peek().or(self.toks.last()).map_or(1, |t| t.line)
    }

    fn next(&mut self) -> Result<Token, ParseError> {
        let t = self.toks.get(self.pos).cloned().ok_or_else(|| syntax(self.line(), "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn skip_seps(&mut self) {
        while self.peek().is_some_and(|t| t.tok == Tok::Sep) {
            self.pos += 1;
        }
    }

    fn at_punct(&self, c: char) -> bool {
        self.peek().is_some_and(|t| t.tok == Tok::Punct(c))
    }

    fn eat_punct(&mut self, c: char) -> bool {
        let hit = self.at_punct(c);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        let t = self.next()?;
        if t.tok == Tok::Punct(c) {
            Ok(())
        } else {
            Err(syntax(t.line, format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        let t = self.next()?;
        match t.tok {
            Tok::Ident(s) => Ok(s),
            _ => Err(syntax(t.line, "expected identifier")),
        }
    }

    /// Optionally signed integer literal.
    fn number(&mut self) -> Result<i64, ParseError> {
        let neg = self.eat_punct('-');
        let t = self.next()?;
        match t.tok {
            Tok::Num(n) => Ok(if neg { -n } else { n }),
            _ => Err(syntax(t.line, "expected number")),
        }
    }

    fn imm32(&mut self) -> Result<i32, ParseError> {
        let line = self.line();
        let n = self.number()?;
        if n < i32::MIN as i64 {
            return Err(syntax(line, format!("immediate {n} does not fit in 32 bits")));
        }
        Ok(n as u32 as i32)
    }

    /// First pass: assign ids to every `data` and `fn` so bodies can refer
    /// forward.
    fn declare_items(&mut self) -> Result<(), ParseError> {
        let mut depth = 0usize;
        let mut i = 0;
        while i < self.toks.len() {
            match &self.toks[i].tok {
                Tok::Punct('{') => depth += 1,
                Tok::Punct('}') => depth = depth.saturating_sub(1),
                Tok::Ident(kw) if depth == 0 && (kw == "data" || kw == "fn") => {
                    if let Some(Token { tok: Tok::Ident(name), line }) = self.toks.get(i + 1) {
                        let (name, line) = (name.clone(), *line);
                        if kw == "data" {
                            if self.symbols.contains_key(&name) {
                                return Err(ParseError::Duplicate { line, name });
                            }
                            self.symbols.insert(name, SymbolId(self.data.len() as u32));
                            self.data.push(None);
                        } else {
                            if self.functions.contains_key(&name) {
                                return Err(ParseError::Duplicate { line, name });
                            }
                            let id = FuncId(self.functions.len() as u32);
                            self.functions.insert(name, id);
                        }
                        i += 1;
                    }
                }
                _ => {}
            }
            i += 1;
        }
        Ok(())
    }

    fn word_list(&mut self) -> Result<Vec<u32>, ParseError> {
        self.expect('[')?;
        let mut words = Vec::new();
        self.skip_seps();
        if self.eat_punct(']') {
            return Ok(words);
        }
        let first = self.data_word()?;
        self.skip_seps();
        if self.at_punct(',') || self.at_punct(']') {
            words.push(first);
            while self.eat_punct(',') {
                self.skip_seps();
                if self.at_punct(']') {
                    break;
                }
                words.push(self.data_word()?);
                self.skip_seps();
            }
            self.expect(']')?;
            return Ok(words);
        }
        // `[value x count]` repeat form
        let line = self.line();
        match self.ident()?.as_str() {
            "x" => {}
            _ => return Err(syntax(line, "expected `,`, `]` or `x COUNT`")),
        }
        let count = self.number()?;
        if !(0..=1 << 24).contains(&count) {
            return Err(syntax(line, format!("repeat count {count} out of range")));
        }
        self.skip_seps();
        self.expect(']')?;
        Ok(alloc::vec![first; count as usize])
    }

    fn data_word(&mut self) -> Result<u32, ParseError> {
        let line = self.line();
        let n = self.number()?;
        if n < i32::MIN as i64 {
            return Err(syntax(line, format!("word {n} does not fit in 32 bits")));
        }
        Ok(n as u32)
    }

    fn reg(&mut self) -> Result<Reg, ParseError> {
        let t = self.next()?;
        if let Tok::Ident(s) = &t.tok {
            if let Some(r) = parse_reg(s, t.line)? {
                return Ok(r);
            }
        }
        Err(syntax(t.line, "expected register"))
    }

    fn at_reg(&self) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Ident(s), .. }) if looks_like_reg(s))
    }

    fn symbol(&mut self, name: String, line: usize) -> Result<SymbolId, ParseError> {
        if let Some(&id) = self.symbols.get(&name) {
            return Ok(id);
        }
        if name == OUTPUT_SYMBOL {
            let id = SymbolId(self.data.len() as u32);
            self.data.push(None);
            self.symbols.insert(name, id);
            self.implicit_out = Some(ImplicitOutput { id, words: 1 });
            return Ok(id);
        }
        Err(ParseError::UndefinedSymbol { line, name })
    }

    fn note_offset(&mut self, sym: SymbolId, offset: i32) {
        if let Some(out) = &mut self.implicit_out {
            if out.id == sym && offset >= 0 {
                out.words = out.words.max(offset as usize / WORD_BYTES as usize + 1);
            }
        }
    }

    fn aligned(&self, line: usize, offset: i64) -> Result<i32, ParseError> {
        if offset % WORD_BYTES as i64 != 0 {
            return Err(ParseError::Misaligned { line, offset });
        }
        if offset < i32::MIN as i64 || offset > i32::MAX as i64 {
            return Err(syntax(line, format!("offset {offset} out of range")));
        }
        Ok(offset as i32)
    }

    /// `+N` / `-N` suffix, or zero.
    fn signed_suffix(&mut self) -> Result<i64, ParseError> {
        if self.eat_punct('+') || self.at_punct('-') {
            self.number()
        } else {
            Ok(0)
        }
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        let line = self.line();
        if self.eat_punct('&') {
            let name = self.ident()?;
            let sym = self.symbol(name, line)?;
            let off = self.signed_suffix()?;
            let offset = self.aligned(line, off)?;
            self.note_offset(sym, offset);
            return Ok(Operand::SymAddr { sym, offset });
        }
        if self.at_reg() {
            return Ok(Operand::Reg(self.reg()?));
        }
        Ok(Operand::Imm(self.imm32()?))
    }

    fn address(&mut self) -> Result<Address, ParseError> {
        let line = self.line();
        if self.eat_punct('[') {
            let base = self.reg()?;
            let off = self.signed_suffix()?;
            let offset = self.aligned(line, off)?;
            self.expect(']')?;
            return Ok(Address::Reg { base, offset });
        }
        let name = self.ident()?;
        let sym = self.symbol(name, line)?;
        let off = if self.eat_punct(',') { self.number()? } else { 0 };
        let offset = self.aligned(line, off)?;
        self.note_offset(sym, offset);
        Ok(Address::Sym { sym, offset })
    }

    fn function_body(&mut self, name: String) -> Result<Function, ParseError> {
        self.expect('{')?;
        let mut blocks: Vec<BasicBlock> = Vec::new();
        let mut labels: BTreeMap<String, usize> = BTreeMap::new();
        let mut fixups: Vec<LabelFixup> = Vec::new();
        let mut open = false;
        loop {
            self.skip_seps();
            let t = self.peek().cloned().ok_or_else(|| syntax(self.line(), "unterminated function body"))?;
            if t.tok == Tok::Punct('}') {
                self.pos += 1;
                break;
            }
            let is_label = matches!(t.tok, Tok::Ident(_))
                && self.toks.get(self.pos + 1).is_some_and(|n| n.tok == Tok::Punct(':'));
            if is_label {
                let label = self.ident()?;
                self.pos += 1;
                if labels.contains_key(&label) {
                    return Err(ParseError::Duplicate { line: t.line, name: label });
                }
                if let Some(b) = blocks.last() {
                    if b.insns.is_empty() {
                        return Err(syntax(t.line, format!("label `{}` has no instructions", b.label)));
                    }
                }
                labels.insert(label.clone(), blocks.len());
                blocks.push(BasicBlock::new(label));
                open = true;
                continue;
            }
            if !open {
                if !blocks.is_empty() {
                    return Err(ParseError::AfterTerminator { line: t.line });
                }
                let label = String::from("entry");
                labels.insert(label.clone(), 0);
                blocks.push(BasicBlock::new(label));
                open = true;
            }
            let block = blocks.len() - 1;
            let insn = blocks[block].insns.len();
            let (instruction, target) = self.instruction()?;
            if let Some(label) = target {
                fixups.push(LabelFixup { block, insn, label, line: t.line });
            }
            if instruction.op.is_terminator() {
                open = false;
            }
            blocks[block].insns.push(instruction);
            let end = self.peek().map(|t| t.tok.clone());
            match end {
                Some(Tok::Sep) | Some(Tok::Punct('}')) => {}
                _ => return Err(syntax(self.line(), "expected end of instruction")),
            }
        }
        if let Some(b) = blocks.last() {
            if b.insns.is_empty() {
                return Err(syntax(self.line(), format!("label `{}` has no instructions", b.label)));
            }
        }
        for fx in fixups {
            let Some(&target) = labels.get(&fx.label) else {
                return Err(ParseError::UndefinedLabel { line: fx.line, label: fx.label });
            };
            let target = BlockId(target as u32);
            match &mut blocks[fx.block].insns[fx.insn].op {
                Op::Branch { target: t, .. } | Op::Jump { target: t } => *t = target,
                Op::Store { value: StoreValue::Code(CodeRef::Block(b)), .. } => *b = target,
                _ => unreachable!("fixup recorded for an op without a label"),
            }
        }
        Ok(Function { name, blocks })
    }

    /// One instruction plus the label it references, if any.
    fn instruction(&mut self) -> Result<(Instruction, Option<String>), ParseError> {
        let t = self.next()?;
        let line = t.line;
        let Tok::Ident(mnemonic) = t.tok else {
            return Err(syntax(line, "expected instruction"));
        };
        let placeholder = BlockId(u32::MAX);
        if let Some(op) = AluOp::ALL.iter().find(|o| o.mnemonic() == mnemonic) {
            let rd = self.reg()?;
            self.expect(',')?;
            let ra = self.reg()?;
            self.expect(',')?;
            let rb = self.operand()?;
            return Ok((Instruction::new(Op::Alu { op: *op, rd, ra, rb }), None));
        }
        if let Some(cond) = Cond::ALL.iter().find(|c| c.mnemonic() == mnemonic) {
            let ra = self.reg()?;
            self.expect(',')?;
            let rb = self.reg()?;
            self.expect(',')?;
            let label = self.ident()?;
            let op = Op::Branch { cond: *cond, ra, rb, target: placeholder };
            return Ok((Instruction::new(op), Some(label)));
        }
        let insn = match mnemonic.as_str() {
            "mov" => {
                let rd = self.reg()?;
                self.expect(',')?;
                let src = self.operand()?;
                Instruction::new(Op::Mov { rd, src })
            }
            "load" => {
                let bypass = if self.eat_punct('!') {
                    let l = self.line();
                    if self.ident()? != "bypass" {
                        return Err(syntax(l, "expected `!bypass`"));
                    }
                    true
                } else {
                    false
                };
                let rd = self.reg()?;
                self.expect(',')?;
                let addr = self.address()?;
                Instruction { op: Op::Load { rd, addr }, bypass, checkpoint: false }
            }
            "store" => {
                let rs = self.reg()?;
                self.expect(',')?;
                let addr = self.address()?;
                Instruction::new(Op::Store { value: StoreValue::Reg(rs), addr })
            }
            "ckpt" => return self.checkpoint(line),
            "jmp" => {
                let label = self.ident()?;
                return Ok((Instruction::new(Op::Jump { target: placeholder }), Some(label)));
            }
            "call" => {
                let name = self.ident()?;
                let callee = *self
                    .functions
                    .get(&name)
                    .ok_or(ParseError::UndefinedFunction { line, name: name.clone() })?;
                Instruction::new(Op::Call { callee })
            }
            "ret" => Instruction::new(Op::Ret),
            "halt" => Instruction::new(Op::Halt),
            other => return Err(syntax(line, format!("unknown instruction `{other}`"))),
        };
        Ok((insn, None))
    }

    /// `ckpt rN`, `ckpt rN = &LABEL`, `ckpt pc = &LABEL | @FUNC | rN`.
    fn checkpoint(&mut self, line: usize) -> Result<(Instruction, Option<String>), ParseError> {
        let slot = match self.peek() {
            Some(Token { tok: Tok::Ident(s), .. }) if s == "pc" => {
                self.pos += 1;
                Slot::Pc
            }
            _ => Slot::Reg(self.reg()?),
        };
        let store = |value| Instruction::checkpoint(Op::Store { value, addr: Address::Slot(slot) });
        if !self.eat_punct('=') {
            return match slot {
                Slot::Reg(r) => Ok((store(StoreValue::Reg(r)), None)),
                Slot::Pc => Err(syntax(line, "`ckpt pc` needs a value")),
            };
        }
        if self.eat_punct('&') {
            let label = self.ident()?;
            return Ok((store(StoreValue::Code(CodeRef::Block(BlockId(u32::MAX)))), Some(label)));
        }
        if self.eat_punct('@') {
            let name = self.ident()?;
            let f = *self
                .functions
                .get(&name)
                .ok_or(ParseError::UndefinedFunction { line, name: name.clone() })?;
            return Ok((store(StoreValue::Code(CodeRef::Func(f))), None));
        }
        let r = self.reg()?;
        Ok((store(StoreValue::Reg(r)), None))
    }
}

fn looks_like_reg(s: &str) -> bool {
    s.len() >= 2 && s.starts_with('r') && s[1..].bytes().all(|b| b.is_ascii_digit())
}

fn parse_reg(s: &str, line: usize) -> Result<Option<Reg>, ParseError> {
    if !looks_like_reg(s) {
        return Ok(None);
    }
    let n: u64 = s[1..].parse().unwrap_or(u64::MAX);
    match u8::try_from(n).ok().and_then(Reg::new) {
        Some(r) => Ok(Some(r)),
        None => Err(ParseError::RegisterOutOfRange { line, reg: n }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let p = parse_program("fn main { L0: store r1, out, 0; halt }").unwrap();
        assert_eq!(p.functions.len(), 1);
        assert_eq!(p.functions[0].blocks.len(), 1);
        assert_eq!(p.data[0].name, "out");
    }

    #[test]
    fn missing_label() {
        let err = parse_program("fn main {\nL0: beq r1, r2, nowhere\nL1: halt\n}").unwrap_err();
        assert_eq!(err, ParseError::UndefinedLabel { line: 2, label: "nowhere".into() });
        assert!(err.to_string().contains("undefined label"));
    }

    #[test]
    fn increment() {
        let src = "data i = [0]\nfn main {\nL0: load r1, i, 0\n add r1, r1, 1\n store r1, i, 0\n halt\n}\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.functions[0].blocks.len(), 1);
        assert_eq!(p.functions[0].blocks[0].insns.len(), 4);
    }

    #[test]
    fn register_out_of_range() {
        let err = parse_program("fn main { L0: mov r16, 1; halt }").unwrap_err();
        assert_eq!(err, ParseError::RegisterOutOfRange { line: 1, reg: 16 });
    }

    #[test]
    fn syntax_error_line() {
        let err = parse_program("data a = [1]\n\nfn main {\n L0: add r1, , 2\n halt }").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 4, .. }), "{err:?}");
    }

    #[test]
    fn undefined_symbol() {
        let err = parse_program("fn main { L0: load r1, nope; halt }").unwrap_err();
        assert!(matches!(err, ParseError::UndefinedSymbol { line: 1, .. }));
    }

    #[test]
    fn misaligned_offset() {
        let err = parse_program("data a = [0, 0]\nfn main { L0: load r1, a, 2; halt }").unwrap_err();
        assert_eq!(err, ParseError::Misaligned { line: 2, offset: 2 });
    }

    #[test]
    fn after_terminator_needs_label() {
        let err = parse_program("fn main {\n L0: jmp L1\n mov r1, 2\n L1: halt\n}").unwrap_err();
        assert_eq!(err, ParseError::AfterTerminator { line: 3 });
    }

    #[test]
    fn recursion_rejected() {
        let err = parse_program("fn main { call f; halt }\nfn f { call f; ret }").unwrap_err();
        assert!(matches!(err, ParseError::Recursion { .. }));
    }

    #[test]
    fn falls_off_end() {
        let err = parse_program("fn main { L0: mov r1, 1 }").unwrap_err();
        assert!(matches!(err, ParseError::FallsOffEnd { .. }));
    }

    #[test]
    fn repeat_form_and_hex() {
        let p = parse_program("data a = [7 x 3]\ndata b = [0x10, -1]\nfn main { halt }").unwrap();
        assert_eq!(p.data[0].init, [7, 7, 7]);
        assert_eq!(p.data[1].init, [16, u32::MAX]);
    }

    #[test]
    fn forward_references() {
        let src = "fn main { L0: call f; mov r2, &tbl+4; halt }\nfn f { ret }\ndata tbl = [1, 2]";
        let p = parse_program(src).unwrap();
        assert_eq!(p.function(p.entry).name, "main");
        assert_eq!(p.functions[1].name, "f");
    }

    #[test]
    fn checkpoint_forms() {
        let src = "fn main {\nL0: ckpt r3\n ckpt r14 = &L1\n ckpt pc = @f\n jmp L1\nL1: ckpt pc = r14\n halt\n}\nfn f { ret }";
        let p = parse_program(src).unwrap();
        let b = &p.functions[0].blocks[0];
        assert!(b.insns.iter().take(3).all(|i| i.checkpoint));
        assert_eq!(
            b.insns[1].op,
            Op::Store {
                value: StoreValue::Code(CodeRef::Block(BlockId(1))),
                addr: Address::Slot(Slot::Reg(Reg(14)))
            }
        );
    }

    #[test]
    fn implicit_out_covers_offsets() {
        let p = parse_program("fn main { store r1, out, 12; halt }").unwrap();
        assert_eq!(p.data[0].init.len(), 4);
    }
}
