// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Region materialization and the cut/combine iteration.
//!
//! Regions never span functions: a call ends its region and a `ret` ends
//! the callee's. Each function is therefore laid out independently from
//! its boundary set.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::normalize::{unique_label, Point};
use crate::error::RegionError;
use crate::ir::{
    Address, BasicBlock, BlockId, BoundaryKind, Cfg, CodeRef, FuncId, Function, Instruction, Op,
    Program, ProgramLiveness, RegSet, RegionTag, Slot, StoreValue, LINK_REG,
};

pub(crate) struct Context<'a> {
    pub p0: &'a Program,
    pub live: ProgramLiveness,
    /// `live_at[f][b][i]`: registers live before instruction `i`.
    live_at: Vec<Vec<Vec<RegSet>>>,
    pub mandatory: Vec<BTreeMap<Point, BoundaryKind>>,
    pub reachable: Vec<Vec<bool>>,
    pub threshold: usize,
}

/// Region of one function, with block indices into the laid-out function.
#[derive(Clone, Debug)]
pub(crate) struct LocalRegion {
    pub entry: usize,
    pub kind: BoundaryKind,
    pub blocks: Vec<usize>,
    pub store_count: usize,
    pub live_out: RegSet,
}

pub(crate) struct Layout {
    pub func: Function,
    pub regions: Vec<LocalRegion>,
    /// Per pre-checkpoint piece: origin `(block, start)` in the normalized
    /// function, instruction count, entry flag and laid-out index.
    pieces: Vec<Piece>,
    /// Pieces in reverse postorder.
    rpo: Vec<usize>,
    preds: Vec<Vec<usize>>,
    region_of: Vec<Option<usize>>,
    /// Laid-out indices of each piece's edge blocks.
    edges: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
struct Piece {
    block: u32,
    start: u32,
    len: u32,
    entry: bool,
    out: usize,
}

fn ckpt_reg(r: crate::ir::Reg) -> Instruction {
    Instruction::checkpoint(Op::Store { value: StoreValue::Reg(r), addr: Address::Slot(Slot::Reg(r)) })
}

fn ckpt_to(slot: Slot, value: StoreValue) -> Instruction {
    Instruction::checkpoint(Op::Store { value, addr: Address::Slot(slot) })
}

fn store_count(insns: &[Instruction]) -> usize {
    insns.iter().filter(|i| i.op.is_store()).count()
}

impl<'a> Context<'a> {
    pub fn new(p0: &'a Program, sb_size: usize) -> Context<'a> {
        let live = ProgramLiveness::compute(p0);
        let mut live_at = Vec::with_capacity(p0.functions.len());
        let mut mandatory = Vec::with_capacity(p0.functions.len());
        let mut reachable = Vec::with_capacity(p0.functions.len());
        for (fi, f) in p0.functions.iter().enumerate() {
            let fid = FuncId(fi as u32);
            live_at.push(
                f.blocks
                    .iter()
                    .enumerate()
                    .map(|(b, block)| (0..=block.insns.len()).map(|i| live.live_before(p0, fid, b, i)).collect())
                    .collect(),
            );
            let cfg = Cfg::build(f);
            let mut m = BTreeMap::new();
            for b in 0..f.blocks.len() {
                if !cfg.reachable[b] {
                    continue;
                }
                let kind = if b == 0 {
                    Some(BoundaryKind::FunctionEntry)
                } else if cfg.loop_headers[b] {
                    Some(BoundaryKind::LoopHeader)
                } else if cfg.preds[b].iter().any(|p| {
                    p.index() + 1 == b
                        && matches!(f.blocks[p.index()].insns.last().map(|i| i.op), Some(Op::Call { .. }))
                }) {
                    Some(BoundaryKind::FunctionExit)
                } else {
                    None
                };
                if let Some(k) = kind {
                    m.insert((b as u32, 0), k);
                }
            }
            mandatory.push(m);
            reachable.push(cfg.reachable);
        }
        Context { p0, live, live_at, mandatory, reachable, threshold: sb_size / 2 }
    }

    fn live_at(&self, f: usize, block: u32, index: u32) -> RegSet {
        self.live_at[f][block as usize][index as usize]
    }

    /// Lays out function `f` with region entries at the mandatory points and
    /// at `cuts`, inserting checkpoint stores on every region exit.
    pub fn materialize(&self, f: usize, cuts: &BTreeSet<Point>) -> Layout {
        let f0 = &self.p0.functions[f];

        // Split at cuts.
        let mut pieces: Vec<Piece> = Vec::new();
        let mut first_piece = Vec::with_capacity(f0.blocks.len());
        for (b, block) in f0.blocks.iter().enumerate() {
            first_piece.push(pieces.len());
            let len = block.insns.len() as u32;
            let mut starts: Vec<u32> = vec![0];
            starts.extend(cuts.range((b as u32, 1)..(b as u32, len)).map(|&(_, i)| i));
            for (k, &s) in starts.iter().enumerate() {
                let end = starts.get(k + 1).copied().unwrap_or(len);
                let pt = (b as u32, s);
                let entry = self.reachable[f][b] && (self.mandatory[f].contains_key(&pt) || cuts.contains(&pt));
                pieces.push(Piece { block: b as u32, start: s, len: end - s, entry, out: 0 });
            }
        }
        let np = pieces.len();
        let piece_at = |b: BlockId| first_piece[b.index()];

        // Piece graph.
        let mut succs: Vec<Vec<usize>> = vec![Vec::new(); np];
        for (x, pc) in pieces.iter().enumerate() {
            let block = &f0.blocks[pc.block as usize];
            let last_piece = pc.start + pc.len == block.insns.len() as u32;
            if !last_piece {
                succs[x].push(x + 1);
                continue;
            }
            let next = BlockId(pc.block + 1);
            match block.insns.last().map(|i| i.op) {
                Some(Op::Branch { target, .. }) if target == next => succs[x].push(piece_at(target)),
                Some(Op::Branch { target, .. }) => {
                    succs[x].push(piece_at(target));
                    succs[x].push(piece_at(next));
                }
                Some(Op::Jump { target }) => succs[x].push(piece_at(target)),
                Some(Op::Ret) | Some(Op::Halt) => {}
                _ => succs[x].push(piece_at(next)),
            }
        }
        let (rpo, reachable) = reverse_postorder(&succs);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); np];
        for x in 0..np {
            if reachable[x] {
                for &s in &succs[x] {
                    preds[s].push(x);
                }
            }
        }

        // Region assignment in topological order.
        let mut region_of: Vec<Option<usize>> = vec![None; np];
        let mut regions: Vec<LocalRegion> = Vec::new();
        for &x in &rpo {
            let mut from = BTreeSet::new();
            let mut unknown = false;
            for &p in &preds[x] {
                match region_of[p] {
                    Some(r) => {
                        from.insert(r);
                    }
                    None => unknown = true,
                }
            }
            let kind = if pieces[x].entry {
                let pt = (pieces[x].block, pieces[x].start);
                Some(self.mandatory[f].get(&pt).copied().unwrap_or(BoundaryKind::StoreBudgetCut))
            } else if unknown {
                Some(BoundaryKind::LoopHeader)
            } else if from.len() > 1 {
                Some(BoundaryKind::Join)
            } else {
                None
            };
            match kind {
                Some(kind) => {
                    pieces[x].entry = true;
                    region_of[x] = Some(regions.len());
                    regions.push(LocalRegion {
                        entry: x,
                        kind,
                        blocks: Vec::new(),
                        store_count: 0,
                        live_out: RegSet::EMPTY,
                    });
                }
                None => region_of[x] = from.first().copied(),
            }
        }

        // Exit checkpoints, decided per piece before layout.
        let live_in = |x: usize| self.live_at(f, pieces[x].block, pieces[x].start);
        let is_exit = |t: usize| pieces[t].entry;
        struct Plan {
            inline: Vec<Instruction>,
            taken: Option<Vec<Instruction>>,
            fall: Option<Vec<Instruction>>,
        }
        let edge_ckpts = |t: usize| -> Vec<Instruction> {
            let mut v: Vec<Instruction> = live_in(t).iter().map(ckpt_reg).collect();
            v.push(ckpt_to(Slot::Pc, StoreValue::Code(CodeRef::Block(BlockId(t as u32)))));
            v
        };
        let mut plans: Vec<Plan> = Vec::with_capacity(np);
        for x in 0..np {
            let mut plan = Plan { inline: Vec::new(), taken: None, fall: None };
            if region_of[x].is_none() {
                plans.push(plan);
                continue;
            }
            let pc = &pieces[x];
            let block = &f0.blocks[pc.block as usize];
            let last_piece = pc.start + pc.len == block.insns.len() as u32;
            let last = block.insns[(pc.start + pc.len - 1) as usize].op;
            match (last_piece, last) {
                (true, Op::Call { callee }) => {
                    let need = self.live.functions[callee.0 as usize].live_in[0];
                    plan.inline.extend(need.minus(RegSet::single(LINK_REG)).iter().map(ckpt_reg));
                    if need.contains(LINK_REG) {
                        let cont = StoreValue::Code(CodeRef::Block(BlockId(x as u32 + 1)));
                        plan.inline.push(ckpt_to(Slot::Reg(LINK_REG), cont));
                    }
                    plan.inline.push(ckpt_to(Slot::Pc, StoreValue::Code(CodeRef::Func(callee))));
                }
                (true, Op::Ret) => {
                    plan.inline.extend(self.live.exit_live[f].iter().map(ckpt_reg));
                    plan.inline.push(ckpt_to(Slot::Pc, StoreValue::Reg(LINK_REG)));
                }
                (true, Op::Halt) => {
                    plan.inline.push(ckpt_to(Slot::Pc, StoreValue::Code(CodeRef::Block(BlockId(x as u32)))));
                }
                (true, Op::Branch { .. }) if succs[x].len() == 2 => {
                    let (t, n) = (succs[x][0], succs[x][1]);
                    if is_exit(t) {
                        plan.taken = Some(edge_ckpts(t));
                    }
                    if is_exit(n) {
                        plan.fall = Some(edge_ckpts(n));
                    }
                }
                _ => {
                    if let Some(&t) = succs[x].first() {
                        if is_exit(t) {
                            plan.inline = edge_ckpts(t);
                        }
                    }
                }
            }
            plans.push(plan);
        }

        // Layout: pieces in order, each followed by its fallthrough edge
        // block; taken-edge blocks at the end.
        let mut out_index = 0usize;
        let mut edges: Vec<Vec<usize>> = vec![Vec::new(); np];
        let mut fall_index = vec![None; np];
        for x in 0..np {
            pieces[x].out = out_index;
            out_index += 1;
            if plans[x].fall.is_some() {
                fall_index[x] = Some(out_index);
                edges[x].push(out_index);
                out_index += 1;
            }
        }
        let mut taken_index = vec![None; np];
        for x in 0..np {
            if plans[x].taken.is_some() {
                taken_index[x] = Some(out_index);
                edges[x].push(out_index);
                out_index += 1;
            }
        }
        let total = out_index;
        let map_block = |b: BlockId| BlockId(pieces[piece_at(b)].out as u32);
        let map_piece = |x: usize| BlockId(pieces[x].out as u32);
        let remap = |insn: &mut Instruction| match &mut insn.op {
            Op::Branch { target, .. } | Op::Jump { target } => *target = map_block(*target),
            Op::Store { value: StoreValue::Code(CodeRef::Block(t)), .. } => *t = map_block(*t),
            _ => {}
        };
        // Checkpoint code refs above name pieces, not normalized blocks.
        let remap_ckpt = |insn: &mut Instruction| {
            if let Op::Store { value: StoreValue::Code(CodeRef::Block(t)), .. } = &mut insn.op {
                *t = map_piece(t.index());
            }
        };

        let mut blocks: Vec<Option<BasicBlock>> = vec![None; total];
        let mut taken_labels: Vec<String> = Vec::new();
        let label_of = |x: usize, taken: &[String]| -> String {
            let pc = &pieces[x];
            let base = &f0.blocks[pc.block as usize].label;
            if pc.start == 0 {
                base.clone()
            } else {
                unique_label(f0, taken, base, "c")
            }
        };
        let mut piece_labels = Vec::with_capacity(np);
        for x in 0..np {
            let l = label_of(x, &taken_labels);
            taken_labels.push(l.clone());
            piece_labels.push(l);
        }
        for x in 0..np {
            let pc = &pieces[x];
            let block = &f0.blocks[pc.block as usize];
            let src = &block.insns[pc.start as usize..(pc.start + pc.len) as usize];
            let mut insns: Vec<Instruction> = src.to_vec();
            insns.iter_mut().for_each(remap);
            let mut inline = plans[x].inline.clone();
            inline.iter_mut().for_each(remap_ckpt);
            let term = insns.last().is_some_and(|i| i.op.is_terminator() || matches!(i.op, Op::Call { .. }));
            if term {
                let t = insns.pop().expect("nonempty");
                insns.extend(inline);
                insns.push(t);
            } else {
                insns.extend(inline);
            }
            if let Some(ti) = taken_index[x] {
                if let Some(Instruction { op: Op::Branch { target, .. }, .. }) = insns.last_mut() {
                    *target = BlockId(ti as u32);
                }
            }
            let mut nb = BasicBlock::new(piece_labels[x].clone());
            nb.insns = insns;
            nb.region = region_of[x].map(|r| RegionTag {
                region: r as u32,
                boundary: (regions[r].entry == x).then_some(regions[r].kind),
            });
            blocks[pc.out] = Some(nb);
            for (slot, ckpts, tag) in [(fall_index[x], &plans[x].fall, "f"), (taken_index[x], &plans[x].taken, "t")] {
                let (Some(slot), Some(ckpts)) = (slot, ckpts) else { continue };
                let label = unique_label(f0, &taken_labels, &piece_labels[x], tag);
                taken_labels.push(label.clone());
                let mut eb = BasicBlock::new(label);
                eb.insns = ckpts.clone();
                eb.insns.iter_mut().for_each(remap_ckpt);
                if tag == "t" {
                    eb.insns.push(Instruction::new(Op::Jump { target: map_piece(succs[x][0]) }));
                }
                eb.region = region_of[x].map(|r| RegionTag { region: r as u32, boundary: None });
                blocks[slot] = Some(eb);
            }
        }
        let func = Function {
            name: f0.name.clone(),
            blocks: blocks.into_iter().map(|b| b.expect("every slot filled")).collect(),
        };

        let mut layout = Layout { func, regions, pieces, rpo, preds, region_of, edges };
        layout.summarize();
        layout
    }

    /// Cut points that would bring every region under the budget, or an
    /// empty list if it already holds.
    ///
    /// Counting restarts after each proposed cut, so a long region gets all
    /// of its cuts in one pass. The proposals are estimates; the caller
    /// re-materializes and checks again.
    pub fn violations(&self, f: usize, layout: &Layout) -> Result<Vec<Point>, RegionError> {
        let t = self.threshold;
        let mut proposals = Vec::new();
        let mut cnt_out = vec![0usize; layout.pieces.len()];
        for &x in &layout.rpo {
            let Some(r) = layout.region_of[x] else { continue };
            let pc = &layout.pieces[x];
            let base = if pc.entry {
                0
            } else {
                layout.preds[x]
                    .iter()
                    .filter(|&&p| layout.region_of[p] == Some(r))
                    .map(|&p| cnt_out[p])
                    .max()
                    .unwrap_or(0)
            };
            let insns = &layout.func.blocks[pc.out].insns;
            let mut c = base;
            let mut last_cut: Option<u32> = None;
            let mut stalled = false;
            for (i, insn) in insns.iter().enumerate() {
                if !insn.op.is_store() || stalled {
                    continue;
                }
                c += 1;
                if c <= t {
                    continue;
                }
                let limit = if insn.checkpoint { pc.len - 1 } else { i as u32 };
                match self.choose_cut(f, pc, base, limit, last_cut) {
                    Some(q) => {
                        proposals.push((pc.block, pc.start + q));
                        last_cut = Some(q);
                        c = store_count(&insns[q as usize..=i]);
                    }
                    None if last_cut.is_some() => stalled = true,
                    None => return Err(self.too_small(f)),
                }
            }
            cnt_out[x] = c;
            if stalled {
                continue;
            }
            for &e in &layout.edges[x] {
                let stores = store_count(&layout.func.blocks[e].insns);
                if c + stores > t {
                    match self.choose_cut(f, pc, base, pc.len - 1, last_cut) {
                        Some(q) => proposals.push((pc.block, pc.start + q)),
                        None if last_cut.is_some() => {}
                        None => return Err(self.too_small(f)),
                    }
                    break;
                }
            }
        }
        proposals.sort_unstable();
        proposals.dedup();
        Ok(proposals)
    }

    fn too_small(&self, f: usize) -> RegionError {
        RegionError::BudgetTooSmall { sb_size: self.threshold * 2, function: self.p0.functions[f].name.clone() }
    }

    /// Latest split point in `pc` (piece-relative, at most `limit`) whose
    /// prefix still fits together with the checkpoints a cut there needs.
    /// Falls back to the latest point that moves at least one store out of
    /// the overflowing suffix.
    fn choose_cut(&self, f: usize, pc: &Piece, base: usize, limit: u32, last_cut: Option<u32>) -> Option<u32> {
        let block = &self.p0.functions[f].blocks[pc.block as usize];
        let src = &block.insns[pc.start as usize..(pc.start + pc.len) as usize];
        let (lo, from, base) = match last_cut {
            Some(q0) => (q0 + 1, q0, 0),
            None if pc.entry => (1, 0, base),
            None => (0, 0, base),
        };
        let prefix = |q: u32| base + store_count(&src[from as usize..q as usize]);
        let fits = |q: u32| {
            // live registers plus the resume PC
            let checkpoint = self.live_at(f, pc.block, pc.start + q).len() + 1;
            prefix(q) + checkpoint <= self.threshold
        };
        let candidates = || (lo..=limit).rev().filter(|&q| prefix(q) >= 1);
        candidates().find(|&q| fits(q)).or_else(|| candidates().next())
    }
}

impl Layout {
    fn summarize(&mut self) {
        let np = self.pieces.len();
        let mut cnt_out = vec![0usize; np];
        for &x in &self.rpo {
            let Some(r) = self.region_of[x] else { continue };
            let pc = &self.pieces[x];
            let base = if pc.entry {
                0
            } else {
                self.preds[x].iter().filter(|&&p| self.region_of[p] == Some(r)).map(|&p| cnt_out[p]).max().unwrap_or(0)
            };
            let block = &self.func.blocks[pc.out];
            cnt_out[x] = base + store_count(&block.insns);
            let region = &mut self.regions[r];
            region.blocks.push(pc.out);
            let mut peak = cnt_out[x];
            let mut blocks = vec![pc.out];
            for &e in &self.edges[x] {
                region.blocks.push(e);
                blocks.push(e);
                peak = peak.max(cnt_out[x] + store_count(&self.func.blocks[e].insns));
            }
            region.store_count = region.store_count.max(peak);
            for b in blocks {
                for insn in &self.func.blocks[b].insns {
                    if let Op::Store { value: StoreValue::Reg(reg), addr: Address::Slot(Slot::Reg(s)) } = insn.op {
                        if reg == s {
                            region.live_out.insert(reg);
                        }
                    }
                }
            }
        }
    }
}

/// Reverse postorder over a successor list rooted at node 0, plus the
/// reachable set.
fn reverse_postorder(succs: &[Vec<usize>]) -> (Vec<usize>, Vec<bool>) {
    let n = succs.len();
    let mut state = vec![0u8; n];
    let mut post = Vec::with_capacity(n);
    if n == 0 {
        return (post, Vec::new());
    }
    let mut stack = vec![(0usize, 0usize)];
    state[0] = 1;
    while let Some(top) = stack.last_mut() {
        let (x, i) = *top;
        if i < succs[x].len() {
            top.1 += 1;
            let s = succs[x][i];
            if state[s] == 0 {
                state[s] = 1;
                stack.push((s, 0));
            }
        } else {
            state[x] = 2;
            post.push(x);
            stack.pop();
        }
    }
    post.reverse();
    (post, state.iter().map(|&s| s == 2).collect())
}

/// Result of the cut/combine iteration for one function.
pub(crate) struct Formed {
    pub layout: Layout,
    pub iterations: usize,
}

pub(crate) fn form_function(
    ctx: &Context<'_>,
    f: usize,
    seeds: &BTreeSet<Point>,
    max_iterations: usize,
) -> Result<Formed, RegionError> {
    let mut cuts: BTreeSet<Point> = seeds.iter().copied().filter(|p| !ctx.mandatory[f].contains_key(p)).collect();
    let mut iterations = 0;
    loop {
        if iterations >= max_iterations {
            return Err(RegionError::NotConverged { iterations });
        }
        iterations += 1;
        let layout = ctx.materialize(f, &cuts);
        let found = ctx.violations(f, &layout)?;
        if found.is_empty() {
            break;
        }
        let before = cuts.len();
        cuts.extend(found.into_iter().filter(|p| !ctx.mandatory[f].contains_key(p)));
        if cuts.len() == before {
            return Err(RegionError::BudgetTooSmall {
                sb_size: ctx.threshold * 2,
                function: ctx.p0.functions[f].name.clone(),
            });
        }
    }

    // Greedy combining: drop cuts, in topological order, while the budget
    // still holds.
    let cfg = Cfg::build(&ctx.p0.functions[f]);
    let mut rank = vec![usize::MAX; cfg.succs.len()];
    for (i, b) in cfg.rpo.iter().enumerate() {
        rank[b.index()] = i;
    }
    loop {
        let mut order: Vec<Point> = cuts.iter().copied().collect();
        order.sort_by_key(|&(b, i)| (rank[b as usize], i));
        let mut changed = false;
        for c in order {
            let mut trial = cuts.clone();
            trial.remove(&c);
            let layout = ctx.materialize(f, &trial);
            if ctx.violations(f, &layout)?.is_empty() {
                cuts = trial;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(Formed { layout: ctx.materialize(f, &cuts), iterations })
}

impl LocalRegion {
    pub fn entry_block(&self, layout: &Layout) -> usize {
        layout.pieces[self.entry].out
    }
}
