// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

use alloc::vec;
use alloc::vec::Vec;

use super::{BlockId, Function, Op};

/// Control-flow graph of one function.
///
/// `call` is not an edge to the callee; a call falls through to the next
/// instruction like any other non-terminator.
#[derive(Clone, Debug)]
pub struct Cfg {
    pub succs: Vec<Vec<BlockId>>,
    pub preds: Vec<Vec<BlockId>>,
    pub reachable: Vec<bool>,
    /// Reverse postorder of a depth-first walk from the entry. It is a
    /// topological order of the graph without its back edges.
    pub rpo: Vec<BlockId>,
    /// Immediate dominator; the entry maps to itself, unreachable blocks to
    /// `None`.
    pub idom: Vec<Option<BlockId>>,
    /// Edges closing a cycle in the depth-first walk.
    pub back_edges: Vec<(BlockId, BlockId)>,
    pub loop_headers: Vec<bool>,
}

/// Successor blocks of `b` in the order branch target, fallthrough.
pub(crate) fn block_succs(f: &Function, b: usize) -> Vec<BlockId> {
    let next = BlockId(b as u32 + 1);
    let block = &f.blocks[b];
    match block.insns.last().map(|i| i.op) {
        Some(Op::Branch { target, .. }) if target == next => vec![target],
        Some(Op::Branch { target, .. }) => vec![target, next],
        Some(Op::Jump { target }) => vec![target],
        Some(Op::Ret) | Some(Op::Halt) => Vec::new(),
        _ => vec![next],
    }
}

impl Cfg {
    pub fn build(f: &Function) -> Cfg {
        let n = f.blocks.len();
        let succs: Vec<Vec<BlockId>> = (0..n).map(|b| block_succs(f, b)).collect();

        // Iterative DFS recording postorder and retreating edges.
        let mut state = vec![0u8; n]; // 0 new, 1 on stack, 2 done
        let mut post = Vec::with_capacity(n);
        let mut back_edges = Vec::new();
        if n > 0 {
            let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
            state[0] = 1;
            while let Some(top) = stack.last_mut() {
                let (b, i) = *top;
                if i < succs[b].len() {
                    top.1 += 1;
                    let s = succs[b][i].index();
                    match state[s] {
                        0 => {
                            state[s] = 1;
                            stack.push((s, 0));
                        }
                        1 => back_edges.push((BlockId(b as u32), BlockId(s as u32))),
                        _ => {}
                    }
                } else {
                    state[b] = 2;
                    post.push(BlockId(b as u32));
                    stack.pop();
                }
            }
        }
        let rpo: Vec<BlockId> = post.iter().rev().copied().collect();
        let reachable: Vec<bool> = state.iter().map(|&s| s == 2).collect();

        let mut preds = vec![Vec::new(); n];
        for (b, ss) in succs.iter().enumerate() {
            if !reachable[b] {
                continue;
            }
            for s in ss {
                preds[s.index()].push(BlockId(b as u32));
            }
        }

        let idom = dominators(&rpo, &preds, n);
        let mut loop_headers = vec![false; n];
        for &(_, h) in &back_edges {
            loop_headers[h.index()] = true;
        }
        Cfg { succs, preds, reachable, rpo, idom, back_edges, loop_headers }
    }

    pub fn is_back_edge(&self, from: BlockId, to: BlockId) -> bool {
        self.back_edges.contains(&(from, to))
    }

    pub fn unreachable(&self) -> impl Iterator<Item = BlockId> + '_ {
        self.reachable.iter().enumerate().filter(|(_, r)| !**r).map(|(i, _)| BlockId(i as u32))
    }

    pub fn dominates(&self, a: BlockId, b: BlockId) -> bool {
        if !self.reachable[a.index()] || !self.reachable[b.index()] {
            return false;
        }
        let mut cur = b;
        loop {
            if cur == a {
                return true;
            }
            let up = self.idom[cur.index()].expect("reachable block has an idom");
            if up == cur {
                return false;
            }
            cur = up;
        }
    }
}

/// Cooper, Harvey and Kennedy's iterative algorithm over reverse postorder.
fn dominators(rpo: &[BlockId], preds: &[Vec<BlockId>], n: usize) -> Vec<Option<BlockId>> {
    let mut order = vec![usize::MAX; n];
    for (i, b) in rpo.iter().enumerate() {
        order[b.index()] = i;
    }
    let mut idom: Vec<Option<usize>> = vec![None; n];
    let Some(entry) = rpo.first() else { return Vec::new() };
    idom[entry.index()] = Some(entry.index());
    let intersect = |idom: &[Option<usize>], mut a: usize, mut b: usize| {
        while a != b {
            while order[a] > order[b] {
                a = idom[a].expect("processed");
            }
            while order[b] > order[a] {
                b = idom[b].expect("processed");
            }
        }
        a
    };
    let mut changed = true;
    while changed {
        changed = false;
        for b in rpo.iter().skip(1).map(|b| b.index()) {
            let mut new = None;
            for p in preds[b].iter().map(|p| p.index()) {
                if idom[p].is_none() {
                    continue;
                }
                new = Some(match new {
                    None => p,
                    Some(cur) => intersect(&idom, p, cur),
                });
            }
            if new.is_some() && idom[b] != new {
                idom[b] = new;
                changed = true;
            }
        }
    }
    idom.into_iter().map(|d| d.map(|d| BlockId(d as u32))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    fn cfg_of(src: &str) -> Cfg {
        let p = parse_program(src).unwrap();
        Cfg::build(&p.functions[0])
    }

    #[test]
    fn straight_line_has_no_headers() {
        let c = cfg_of("fn main {\nA: jmp B\nB: jmp C\nC: halt\n}");
        assert!(c.loop_headers.iter().all(|h| !h));
        assert_eq!(c.rpo, [BlockId(0), BlockId(1), BlockId(2)]);
    }

    #[test]
    fn self_loop_is_header() {
        let c = cfg_of("fn main {\nA: add r1, r1, 1\n bne r1, r2, A\nB: halt\n}");
        assert!(c.loop_headers[0]);
        assert!(!c.loop_headers[1]);
        assert_eq!(c.back_edges, [(BlockId(0), BlockId(0))]);
    }

    #[test]
    fn unreachable_block_reported() {
        let c = cfg_of("fn main {\nA: halt\nB: jmp A\n}");
        assert_eq!(c.unreachable().collect::<Vec<_>>(), [BlockId(1)]);
        assert!(c.preds[0].is_empty());
    }

    #[test]
    fn diamond_dominators() {
        let c = cfg_of("fn main {\nA: beq r1, r2, C\nB: jmp D\nC: mov r3, 1\nD: halt\n}");
        assert_eq!(c.idom[3], Some(BlockId(0)));
        assert!(c.dominates(BlockId(0), BlockId(3)));
        assert!(!c.dominates(BlockId(1), BlockId(3)));
    }
}
