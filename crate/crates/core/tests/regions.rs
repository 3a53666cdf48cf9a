// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Region formation checked against brute-force oracles on the linked code.

mod common;

use std::collections::BTreeSet;

use common::{check_bypass_dynamically, corpus, exits, live_set, max_path_stores, needed_at, program};
use icsim_core::ir::{interpret_reference, print_program, Cfg, Executable, ProgramLiveness};
use icsim_core::regionizer::Regionized;
use icsim_core::power::PowerTrace;
use icsim_core::{form_regions, parse_program, simulate, SimConfig};
use proptest::prelude::*;

fn check_budget(r: &Regionized) -> Result<(), String> {
    let exe = Executable::link(&r.program);
    for pc in 0..exe.code.len() as u32 {
        if exe.region_start[pc as usize] {
            let n = max_path_stores(&exe, pc);
            if n > r.threshold {
                return Err(format!("{} stores on a path from {}", n, exe.describe_pc(pc)));
            }
        }
    }
    Ok(())
}

fn check_checkpoints(r: &Regionized) -> Result<(), String> {
    let exe = Executable::link(&r.program);
    let exits = exits(&exe);
    let inserted: usize = exits.iter().map(|e| e.saved.len() + 1).sum();
    if inserted != r.checkpoint_stores() {
        return Err(format!("recounted {inserted} checkpoint stores, regionizer reports {}", r.checkpoint_stores()));
    }
    for e in &exits {
        let need = needed_at(&exe, e);
        if e.saved != need {
            return Err(format!("exit at {} saves {:?}, needs {:?}", exe.describe_pc(e.pc), e.saved, need));
        }
    }
    Ok(())
}

#[test]
fn corpus_paths_fit_half_the_buffer() {
    for (name, src) in corpus() {
        let r = form_regions(&parse_program(&src).unwrap(), 40).unwrap();
        assert_eq!(r.threshold, 20);
        check_budget(&r).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn corpus_checkpoint_counts_match_recount() {
    for (name, src) in corpus() {
        let r = form_regions(&parse_program(&src).unwrap(), 40).unwrap();
        check_checkpoints(&r).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn small_buffers_still_fit() {
    for (name, src) in corpus() {
        for sb in [12, 16, 24] {
            let r = match form_regions(&parse_program(&src).unwrap(), sb) {
                Ok(r) => r,
                Err(e) => panic!("{name} at {sb}: {e}"),
            };
            check_budget(&r).unwrap_or_else(|e| panic!("{name} at {sb}: {e}"));
        }
    }
}

#[test]
fn corpus_bypass_is_sound() {
    for (name, src) in corpus() {
        let r = form_regions(&parse_program(&src).unwrap(), 40).unwrap();
        let exe = Executable::link(&r.program);
        let (loads, bypassed) = check_bypass_dynamically(&exe, 1_000_000).unwrap_or_else(|e| panic!("{name}: {e}"));
        let res = simulate(&r, &PowerTrace::constant(3.5), &SimConfig::default()).unwrap();
        assert_eq!((res.bypass.dynamic_loads, res.bypass.dynamic_bypassed), (loads, bypassed), "{name}");
    }
}

#[test]
fn disjoint_symbols_bypass_almost_everything() {
    let src = corpus().into_iter().find(|(n, _)| n == "lookup_table").unwrap().1;
    let r = form_regions(&parse_program(&src).unwrap(), 40).unwrap();
    assert!(r.bypass.rate() > 0.8, "{:?}", r.bypass);
    let res = simulate(&r, &PowerTrace::constant(3.5), &SimConfig::default()).unwrap();
    assert!(res.bypass.dynamic_rate >= 0.98, "{:?}", res.bypass);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn liveness_matches_path_search(src in program(true)) {
        let p = parse_program(&src).unwrap();
        let exe = Executable::link(&p);
        let live = ProgramLiveness::compute(&p);
        for (f, func) in p.functions.iter().enumerate() {
            let fid = icsim_core::ir::FuncId(f as u32);
            for (b, block) in func.blocks.iter().enumerate() {
                for i in 0..block.insns.len() {
                    let pc = exe.block_pc[f][b] + i as u32;
                    let want = live_set(&exe, pc);
                    let got: BTreeSet<usize> = live.live_before(&p, fid, b, i).iter().map(|r| r.index()).collect();
                    prop_assert_eq!(got, want, "at {}", exe.describe_pc(pc));
                }
            }
        }
    }

    #[test]
    fn dominators_match_removal(src in program(false)) {
        let p = parse_program(&src).unwrap();
        let f = &p.functions[0];
        let cfg = Cfg::build(f);
        let n = f.blocks.len();
        let reach_without = |skip: usize| {
            let mut seen = vec![false; n];
            let mut work = vec![0usize];
            while let Some(b) = work.pop() {
                if b == skip || seen[b] {
                    continue;
                }
                seen[b] = true;
                work.extend(cfg.succs[b].iter().map(|s| s.index()));
            }
            seen
        };
        for a in 0..n {
            let seen = reach_without(a);
            for (b, &seen_b) in seen.iter().enumerate() {
                if !cfg.reachable[b] {
                    continue;
                }
                let want = a == b || !seen_b;
                let got = cfg.dominates(icsim_core::ir::BlockId(a as u32), icsim_core::ir::BlockId(b as u32));
                prop_assert_eq!(got, want, "{} dom {}", a, b);
            }
        }
    }

    #[test]
    fn regions_respect_budget_and_semantics(src in program(true), sb in prop::sample::select(vec![10usize, 16, 24, 40])) {
        let p = parse_program(&src).unwrap();
        let r = form_regions(&p, sb);
        prop_assume!(!matches!(r, Err(icsim_core::RegionError::BudgetTooSmall { .. })));
        let r = r.unwrap();
        prop_assert!(check_budget(&r).is_ok(), "{:?}", check_budget(&r));
        prop_assert!(check_checkpoints(&r).is_ok(), "{:?}", check_checkpoints(&r));
        let again = form_regions(&r.program, sb).unwrap();
        prop_assert_eq!(print_program(&again.program), print_program(&r.program));
        let golden = interpret_reference(&r.program, 1_000_000).unwrap();
        prop_assert_eq!(&golden.memory, &interpret_reference(&p, 1_000_000).unwrap().memory);
        let res = simulate(&r, &PowerTrace::constant(3.5), &SimConfig::default()).unwrap();
        prop_assert_eq!(res.memory, golden.memory);
        prop_assert!(res.max_half_occupancy <= sb / 2);
        let exe = Executable::link(&r.program);
        let checked = check_bypass_dynamically(&exe, 1_000_000);
        prop_assert!(checked.is_ok(), "{:?}", checked);
    }
}
