// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Region formation.
//!
//! A region is a single-entry, acyclic piece of one function whose stores,
//! including the checkpoint stores on its exits, fit in half of the store
//! buffer on every path. Regions start at function entries, after calls
//! return, at loop headers, at budget cuts and where paths from different
//! regions merge. Every exit edge saves the registers live at the target
//! plus the target's PC to the checkpoint slots.

mod alias;
mod formation;
mod normalize;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

pub use alias::{
    footprint, mark_bypass_loads, points_to, region_predecessors, BypassStats, Footprint, PointsTo,
};

use crate::error::RegionError;
use crate::ir::{BoundaryKind, Cfg, Executable, Function, Program, RegSet, RegionTag};
use formation::{form_function, Context, Layout};
use normalize::normalize;

pub const DEFAULT_MAX_ITERATIONS: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub id: u32,
    pub function: String,
    /// Label of the entry block.
    pub entry: String,
    pub entry_pc: u32,
    pub kind: BoundaryKind,
    /// Member block labels in topological order.
    pub blocks: Vec<String>,
    /// Most stores on any path, checkpoint stores included.
    pub store_count: usize,
    /// Registers saved on at least one exit.
    pub live_out: RegSet,
}

#[derive(Clone, Debug)]
pub struct Regionized {
    pub program: Program,
    pub regions: Vec<Region>,
    pub sb_size: usize,
    pub threshold: usize,
    /// Cut/check rounds of the slowest function.
    pub iterations: usize,
    pub bypass: BypassStats,
    /// Unreachable blocks, which belong to no region.
    pub warnings: Vec<String>,
}

impl Regionized {
    pub fn checkpoint_stores(&self) -> usize {
        self.program
            .functions
            .iter()
            .flat_map(|f| &f.blocks)
            .flat_map(|b| &b.insns)
            .filter(|i| i.checkpoint)
            .count()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RegionOptions {
    pub max_iterations: usize,
}

impl Default for RegionOptions {
    fn default() -> Self {
        RegionOptions { max_iterations: DEFAULT_MAX_ITERATIONS }
    }
}

/// Partitions `p` into regions that fit `sb_size / 2` stores, inserts
/// checkpoints and marks bypass loads.
///
/// Checkpoints, edge blocks and budget cuts from an earlier run are
/// recognized, so running this on its own output returns it unchanged.
pub fn form_regions(p: &Program, sb_size: usize) -> Result<Regionized, RegionError> {
    form_regions_with(p, sb_size, RegionOptions::default())
}

pub fn form_regions_with(p: &Program, sb_size: usize, opts: RegionOptions) -> Result<Regionized, RegionError> {
    let norm = normalize(p);
    let ctx = Context::new(&norm.program, sb_size);
    let mut layouts = Vec::with_capacity(norm.program.functions.len());
    let mut iterations = 0;
    for f in 0..norm.program.functions.len() {
        let formed = form_function(&ctx, f, &norm.seeds[f], opts.max_iterations)?;
        iterations = iterations.max(formed.iterations);
        layouts.push(formed.layout);
    }
    Ok(assemble(&norm.program, layouts, sb_size, iterations))
}

/// Regions from the mandatory boundaries alone, with checkpoints but
/// without enforcing the store budget.
pub fn place_initial_boundaries(p: &Program) -> Regionized {
    let norm = normalize(p);
    let ctx = Context::new(&norm.program, usize::MAX);
    let layouts = (0..norm.program.functions.len()).map(|f| ctx.materialize(f, &BTreeSet::new())).collect();
    assemble(&norm.program, layouts, usize::MAX, 0)
}

fn assemble(p0: &Program, layouts: Vec<Layout>, sb_size: usize, iterations: usize) -> Regionized {
    let mut functions: Vec<Function> = Vec::with_capacity(layouts.len());
    let mut regions = Vec::new();
    let mut warnings = Vec::new();
    for (fi, mut layout) in layouts.into_iter().enumerate() {
        let offset = regions.len() as u32;
        for b in &mut layout.func.blocks {
            if let Some(tag) = &mut b.region {
                *tag = RegionTag { region: tag.region + offset, boundary: tag.boundary };
            }
        }
        for (i, r) in layout.regions.iter().enumerate() {
            regions.push(Region {
                id: offset + i as u32,
                function: layout.func.name.clone(),
                entry: layout.func.blocks[r.entry_block(&layout)].label.clone(),
                entry_pc: 0,
                kind: r.kind,
                blocks: r.blocks.iter().map(|&b| layout.func.blocks[b].label.clone()).collect(),
                store_count: r.store_count,
                live_out: r.live_out,
            });
        }
        let cfg = Cfg::build(&p0.functions[fi]);
        for b in cfg.unreachable() {
            warnings.push(format!(
                "unreachable block `{}` in `{}` is not part of any region",
                p0.functions[fi].blocks[b.index()].label,
                p0.functions[fi].name
            ));
        }
        functions.push(layout.func);
    }
    let mut program = Program { functions, data: p0.data.clone(), entry: p0.entry };
    let bypass = mark_bypass_loads(&mut program);
    let exe = Executable::link(&program);
    for r in &mut regions {
        let f = program.function_by_name(&r.function).expect("region function exists");
        let b = program.function(f).block_by_label(&r.entry).expect("entry label exists");
        r.entry_pc = exe.block_pc[f.0 as usize][b.index()];
    }
    Regionized {
        program,
        regions,
        sb_size,
        threshold: sb_size / 2,
        iterations,
        bypass,
        warnings,
    }
}
