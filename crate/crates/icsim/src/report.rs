// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Report files: JSON results, CSV tables and JSON-lines event logs.

use std::io::Write;

use anyhow::Result;
use icsim_core::machine::{Category, EnergyMeter, Event};
use icsim_core::regionizer::Regionized;
use icsim_core::sim::{Completion, SimResult};
use serde::Serialize;

pub fn write_json<T: Serialize + ?Sized>(value: &T, mut w: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

pub fn write_events(events: &[Event], mut w: impl Write) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        writeln!(w)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EnergyRow {
    category: &'static str,
    energy_fj: u64,
    energy_uj: f64,
    fraction: f64,
}

/// One row per energy category.
pub fn write_energy_csv(meter: &EnergyMeter, w: impl Write) -> Result<()> {
    let total = meter.total();
    let mut wtr = csv::Writer::from_writer(w);
    for c in Category::ALL {
        let fj = meter.get(c);
        let fraction = if total == 0 { 0.0 } else { fj as f64 / total as f64 };
        wtr.serialize(EnergyRow { category: c.name(), energy_fj: fj, energy_uj: fj as f64 / 1e9, fraction })?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    pub mode: &'static str,
    pub status: Completion,
    pub on_us: f64,
    pub off_us: f64,
    pub completion_us: f64,
    pub outages: u64,
    pub instructions: u64,
    pub energy_fj: u64,
    pub matches_golden: bool,
}

impl CompareRow {
    pub fn new(mode: &'static str, r: &SimResult, matches_golden: bool) -> CompareRow {
        CompareRow {
            mode,
            status: r.status,
            on_us: r.on_ns as f64 / 1000.0,
            off_us: r.off_ns as f64 / 1000.0,
            completion_us: r.completion_us,
            outages: r.outages,
            instructions: r.instructions,
            energy_fj: r.energy.total(),
            matches_golden,
        }
    }
}

pub fn write_compare_csv(rows: &[CompareRow], w: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RegionJson<'a> {
    id: u32,
    function: &'a str,
    entry: &'a str,
    entry_pc: u32,
    kind: icsim_core::ir::BoundaryKind,
    blocks: &'a [String],
    store_count: usize,
    live_out: Vec<String>,
}

#[derive(Serialize)]
struct BypassJson {
    loads: usize,
    bypassed: usize,
    rate: f64,
}

#[derive(Serialize)]
struct CompileJson<'a> {
    sb_size: usize,
    threshold: usize,
    iterations: usize,
    checkpoint_stores: usize,
    bypass: BypassJson,
    regions: Vec<RegionJson<'a>>,
    warnings: &'a [String],
}

pub fn write_regions_json(r: &Regionized, w: impl Write) -> Result<()> {
    let regions = r
        .regions
        .iter()
        .map(|g| RegionJson {
            id: g.id,
            function: &g.function,
            entry: &g.entry,
            entry_pc: g.entry_pc,
            kind: g.kind,
            blocks: &g.blocks,
            store_count: g.store_count,
            live_out: g.live_out.iter().map(|r| format!("r{}", r.index())).collect(),
        })
        .collect();
    let report = CompileJson {
        sb_size: r.sb_size,
        threshold: r.threshold,
        iterations: r.iterations,
        checkpoint_stores: r.checkpoint_stores(),
        bypass: BypassJson { loads: r.bypass.loads, bypassed: r.bypass.bypassed, rate: r.bypass.rate() },
        regions,
        warnings: &r.warnings,
    };
    write_json(&report, w)
}
