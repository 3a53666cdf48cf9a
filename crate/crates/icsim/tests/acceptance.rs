// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Runs without the libtest harness so the lines
//! always show up in the test output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::{check_bypass_dynamically, corpus, max_path_stores};
use icsim::parallel::verify_parallel;
use icsim::report;
use icsim_core::ir::{interpret_reference, Executable};
use icsim_core::machine::{Category, Event, EventKind, MachineConfig, ReleaseKind, TimingModel};
use icsim_core::persistence::Protocol;
use icsim_core::power::{gen_trace, simulate_nvp, AdaptiveConfig, ModeChange, NvpConfig, PowerTrace, TraceSpec};
use icsim_core::sim::Completion;
use icsim_core::verify::{Verifier, VerifyConfig};
use icsim_core::{form_regions, parse_program, simulate, Regionized, SimConfig, SimResult};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn e(x: impl Display) -> String {
    x.to_string()
}

fn compile(src: &str, sb: usize) -> Result<Regionized, String> {
    form_regions(&parse_program(src).map_err(e)?, sb).map_err(e)
}

fn corpus_program(name: &str) -> Result<String, String> {
    corpus().into_iter().find(|(n, _)| n == name).map(|(_, s)| s).ok_or(format!("no corpus program {name}"))
}

fn run(r: &Regionized, trace: &PowerTrace, machine: MachineConfig) -> Result<SimResult, String> {
    let cfg = SimConfig { machine: MachineConfig { record_events: true, ..machine }, ..SimConfig::default() };
    simulate(r, trace, &cfg).map_err(e)
}

fn matrix() -> Vec<(Protocol, bool, Option<u64>)> {
    let mut out = Vec::new();
    for protocol in [Protocol::TwoBit, Protocol::OneBit] {
        for ilp in [true, false] {
            for dma in [None, Some(4)] {
                out.push((protocol, ilp, dma));
            }
        }
    }
    out
}

fn machine(protocol: Protocol, ilp: bool, dma: Option<u64>) -> MachineConfig {
    let timing = TimingModel { dma_factor: dma, ..TimingModel::default() };
    MachineConfig { protocol, ilp, timing, ..MachineConfig::default() }
}

fn crash_consistency() -> Check {
    let corpus = corpus();
    let names: BTreeSet<&str> = corpus.iter().map(|(n, _)| n.as_str()).collect();
    ensure!(corpus.len() >= 10, "corpus has only {} programs", corpus.len());
    for need in ["increment", "war_loop", "nested_calls", "store_dense"] {
        ensure!(names.contains(need), "corpus lacks {need}");
    }
    let (mut points, mut runs) = (0, 0);
    for (name, src) in &corpus {
        let r = compile(src, 40)?;
        for (protocol, ilp, dma) in matrix() {
            let cfg = VerifyConfig { machine: machine(protocol, ilp, dma), double_failure: true, ..VerifyConfig::default() };
            let rep = verify_parallel(&r, name, cfg).map_err(e)?;
            ensure!(
                rep.failures == 0,
                "{name} {protocol:?} ilp={ilp} dma={dma:?}: {} mismatches, first {:?}",
                rep.failures,
                rep.first_counterexample
            );
            points += rep.injection_points;
            runs += 1;
        }
    }
    Ok(format!("{} programs, {runs} sweeps, {points} injection points, 0 mismatches", corpus.len()))
}

fn naive_reproduction() -> Check {
    let r = compile(&corpus_program("increment")?, 40)?;
    let naive = VerifyConfig {
        machine: MachineConfig { naive: true, ..MachineConfig::default() },
        double_failure: false,
        ..VerifyConfig::default()
    };
    let v = Verifier::new(&r, naive.clone()).map_err(e)?;
    // first cut whose NVM already holds the incremented value
    let (step, state) = v.cuts.iter().find(|(_, s)| s.nvm.primary()[0] == 1).ok_or("naive store never reached NVM")?;
    let (mem, err) = v.run_from(state.clone());
    ensure!(err.is_none(), "naive recovery failed: {err:?}");
    ensure!(mem[0] == 2, "naive cut after the store gives i = {}", mem[0]);
    ensure!(!verify_parallel(&r, "increment", naive).map_err(e)?.consistent(), "naive verify reports no mismatch");

    let mut cuts = 0;
    for protocol in [Protocol::TwoBit, Protocol::OneBit] {
        let cfg = VerifyConfig { machine: machine(protocol, true, None), ..VerifyConfig::default() };
        let v = Verifier::new(&r, cfg.clone()).map_err(e)?;
        for (at, state) in &v.cuts {
            let (mem, err) = v.run_from(state.clone());
            ensure!(err.is_none() && mem == [1], "{protocol:?}: cut at step {at} gives {mem:?} {err:?}");
        }
        cuts += v.cuts.len();
        let rep = verify_parallel(&r, "increment", cfg).map_err(e)?;
        ensure!(rep.consistent(), "{protocol:?}: {:?}", rep.first_counterexample);
    }
    Ok(format!("naive cut after step {step} gives i = 2; buffered mode gives i = 1 at all {cuts} cuts"))
}

fn region_budget() -> Check {
    let (mut worst_static, mut worst_dynamic) = (0, 0);
    for (name, src) in corpus() {
        let r = compile(&src, 40)?;
        ensure!(r.threshold == 20, "{name}: threshold {}", r.threshold);
        let exe = Executable::link(&r.program);
        for pc in 0..exe.code.len() as u32 {
            if exe.region_start[pc as usize] {
                let n = max_path_stores(&exe, pc);
                ensure!(n <= 20, "{name}: {n} stores on a path from {}", exe.describe_pc(pc));
                worst_static = worst_static.max(n);
            }
        }
        for ilp in [true, false] {
            let res = run(&r, &PowerTrace::constant(3.5), MachineConfig { ilp, ..MachineConfig::default() })?;
            ensure!(res.status == Completion::Completed, "{name}: {:?}", res.status);
            ensure!(res.max_half_occupancy <= 20, "{name}: half held {} entries", res.max_half_occupancy);
            worst_dynamic = worst_dynamic.max(res.max_half_occupancy);
        }
    }
    Ok(format!("max {worst_static} stores on any static path, max {worst_dynamic} entries in a half at run time"))
}

/// `trips` iterations of a loop with `stores` stores and `pad` ALU ops.
fn ilp_loop(stores: usize, pad: usize, trips: u32) -> String {
    let mut s = format!("data out = [0 x 16]\nfn main {{\nA:  mov r10, 0\n    mov r12, {trips}\nL:\n");
    for i in 0..stores {
        s += &format!("    store r10, out, {}\n", 4 * i);
    }
    for i in 0..pad {
        s += &format!("    add r2, r10, {i}\n");
    }
    s + "    add r10, r10, 1\n    blt r10, r12, L\nE:  halt\n}\n"
}

fn stalls(events: &[Event]) -> Vec<u64> {
    events
        .iter()
        .filter_map(|ev| match ev.kind {
            EventKind::Stall { cycles } => Some(cycles),
            _ => None,
        })
        .collect()
}

fn region_releases(events: &[Event]) -> Vec<u32> {
    events
        .iter()
        .filter_map(|ev| match ev.kind {
            EventKind::ReleaseStart { kind: ReleaseKind::Region, entries } => Some(entries),
            _ => None,
        })
        .collect()
}

fn ilp_property() -> Check {
    // The loop region exits over the back edge through `ckpt r10`,
    // `ckpt r12`, `ckpt pc` and `jmp`, so with three stores it releases
    // n = 6 entries: 3 status writes of 3 cycles, 6 proxy writes and the
    // count at 3 cycles, 6 copies at 4 cycles, 12 + 7n = 54 cycles.
    // One iteration takes 3 stores + pad + add + blt + 3 ckpt + jmp, all
    // single-cycle, so pad + 9 cycles.
    let release = 12 + 7 * 6;
    let steady_loop = |pad: usize| -> Result<(Regionized, SimResult), String> {
        let r = compile(&ilp_loop(3, pad, 8), 40)?;
        let lp = r.regions.iter().find(|g| g.entry == "L").ok_or("no region at L")?;
        ensure!(lp.store_count == 6, "loop region holds {} stores, not 6", lp.store_count);
        let res = run(&r, &PowerTrace::constant(3.5), MachineConfig::default())?;
        let sizes = region_releases(&res.events);
        ensure!(sizes.iter().skip(1).all(|&n| n == 6), "loop releases {sizes:?}");
        Ok((r, res))
    };

    let (_, long) = steady_loop(60)?;
    ensure!(60 + 9 >= release, "fixture region is shorter than its release");
    ensure!(long.ilp_efficiency == 1.0, "long regions: efficiency {}", long.ilp_efficiency);
    ensure!(long.stall_cycles == 0, "long regions: {} stall cycles", long.stall_cycles);

    let pad = 18;
    let region = pad as u64 + 9;
    ensure!(2 * region == release, "fixture region is not half the release");
    let (_, short) = steady_loop(pad)?;
    let got = stalls(&short.events);
    // the first iteration overlaps the entry region's 3-entry release
    let first = (12 + 7 * 3) - region;
    let mut want = vec![first];
    want.extend(std::iter::repeat_n(release - region, 6));
    ensure!(got == want, "stalls {got:?}, derived {want:?}");

    let dense = compile(&corpus_program("store_dense")?, 40)?;
    let on = run(&dense, &PowerTrace::constant(3.5), MachineConfig::default())?;
    let off = run(&dense, &PowerTrace::constant(3.5), MachineConfig { ilp: false, ..MachineConfig::default() })?;
    ensure!(on.completion_ns < off.completion_ns, "store_dense: ILP on {} ns, off {} ns", on.completion_ns, off.completion_ns);
    Ok(format!(
        "efficiency 1.0 with 0 stalls; stall {} = 54 - 27 cycles at every loop boundary; store_dense {} ns with ILP, {} ns without",
        release - region,
        on.completion_ns,
        off.completion_ns
    ))
}

fn dma_factor() -> Check {
    let mut src = String::from("data out = [0 x 32]\nfn main {\nA:  mov r1, 7\n");
    for i in 0..30 {
        src += &format!("    store r1, out, {}\n", 4 * i);
    }
    src += "    halt\n}\n";
    let r = compile(&src, 40)?;
    let phase2 = |dma: Option<u64>| -> Result<u64, String> {
        let res = run(&r, &PowerTrace::constant(3.5), machine(Protocol::TwoBit, true, dma))?;
        res.events
            .iter()
            .find_map(|ev| match ev.kind {
                EventKind::ReleaseDone { kind: ReleaseKind::Region, entries: 20, phase2_cycles, .. } => {
                    Some(phase2_cycles)
                }
                _ => None,
            })
            .ok_or("no 20-entry release in the event log".into())
    };
    let (cpu, dma) = (phase2(None)?, phase2(Some(4))?);
    let per_entry = TimingModel::default().copy_cycles();
    ensure!(cpu == 20 * per_entry, "CPU copy took {cpu} cycles");
    ensure!(dma == 20 * per_entry.div_ceil(4), "DMA copy took {dma} cycles");
    ensure!(4 * dma == cpu, "DMA {dma} is not a quarter of {cpu}");
    Ok(format!("20-entry phase 2: {cpu} cycles by CPU, {dma} with DMA x4"))
}

/// Powered for 410 µs, then 290 µs dark; after the 310 µs wake-up about
/// 100 µs (2500 cycles) of each period is usable.
fn short_window_trace() -> PowerTrace {
    PowerTrace::from_samples(&[(0.0, 3.5), (410.0, 3.5), (411.0, 0.5), (700.0, 0.5), (701.0, 3.5)]).unwrap()
}

/// One region of about 12000 cycles, several ON windows long.
fn long_region() -> String {
    let mut s = String::from("data out = [0]\nfn main {\nA:  mov r1, 0\n");
    for _ in 0..12_000 {
        s += "    add r1, r1, 1\n";
    }
    s + "    store r1, out\n    halt\n}\n"
}

fn stagnation_runs() -> Result<(SimResult, SimResult), String> {
    let r = compile(&long_region(), 40)?;
    let trace = short_window_trace();
    let stuck = SimConfig {
        machine: MachineConfig {
            adaptive: AdaptiveConfig { watchdog: false, ..AdaptiveConfig::default() },
            record_events: true,
            ..MachineConfig::default()
        },
        stagnation_outages: 10,
        ..SimConfig::default()
    };
    let adaptive = SimConfig { stagnation_outages: 10, ..stuck.clone() };
    let adaptive = SimConfig { machine: MachineConfig { adaptive: AdaptiveConfig::default(), ..adaptive.machine }, ..adaptive };
    Ok((simulate(&r, &trace, &stuck).map_err(e)?, simulate(&r, &trace, &adaptive).map_err(e)?))
}

fn watchdog_stagnation() -> Check {
    let (stuck, res) = stagnation_runs()?;
    ensure!(stuck.status == Completion::Stagnated, "watchdog disabled: {:?} after {} outages", stuck.status, stuck.outages);
    ensure!(res.status == Completion::Completed, "adaptive: {:?} after {} outages", res.status, res.outages);
    ensure!(res.output == [12_000], "adaptive output {:?}", res.output);

    let mut halvings = 0;
    let mut period: Option<u64> = None;
    let mut on_at = None;
    let mut last_index = None;
    let mut checked = 0;
    let mut window_min = u64::MAX;
    for ev in &res.events {
        match ev.kind {
            EventKind::Mode { change: ModeChange::WatchdogArmed { period: p } } => period = Some(p),
            EventKind::Mode { change: ModeChange::WatchdogHalved { period: p } } => {
                period = Some(p);
                halvings += 1;
            }
            EventKind::Mode { change: ModeChange::WatchdogDisarmed } => period = None,
            EventKind::PowerOn => on_at = Some((ev.cycle, period)),
            EventKind::PowerOff { committed_index } => {
                if let Some((start, p)) = on_at.take() {
                    let window = ev.cycle - start;
                    window_min = window_min.min(window);
                    if p.is_some_and(|p| p < window) {
                        if let Some(prev) = last_index {
                            ensure!(committed_index > prev, "no progress in a {window}-cycle window at period {p:?}");
                        }
                        checked += 1;
                    }
                }
                last_index = Some(committed_index);
            }
            _ => {}
        }
    }
    ensure!(halvings > 0, "no watchdog halving in the mode log");
    ensure!(checked > 0, "the watchdog period never dropped below the ON window");
    Ok(format!(
        "disabled: stagnated after {} outages; adaptive: completed after {} outages, {halvings} halvings, index grew across {checked} short-period windows (ON window >= {window_min} cycles)",
        stuck.outages, res.outages
    ))
}

fn bypass_soundness() -> Check {
    let mut notes = Vec::new();
    let mut violations = 0;
    for (name, src) in corpus() {
        let r = compile(&src, 40)?;
        let exe = Executable::link(&r.program);
        let (loads, bypassed) = check_bypass_dynamically(&exe, 10_000_000).map_err(|m| format!("{name}: {m}"))?;
        let res = run(&r, &PowerTrace::constant(3.5), MachineConfig::default())?;
        ensure!(
            (res.bypass.dynamic_loads, res.bypass.dynamic_bypassed) == (loads, bypassed),
            "{name}: machine counted {:?}, oracle {loads}/{bypassed}",
            res.bypass
        );
        for (protocol, ilp, dma) in matrix() {
            let cfg = VerifyConfig { machine: machine(protocol, ilp, dma), ..VerifyConfig::default() };
            violations += verify_parallel(&r, &name, cfg).map_err(e)?.bypass_violations;
        }
        if name == "lookup_table" {
            ensure!(res.bypass.dynamic_rate >= 0.98, "lookup_table run-time rate {}", res.bypass.dynamic_rate);
        }
        notes.push(format!("{name} {:.2}/{:.2}", res.bypass.static_rate, res.bypass.dynamic_rate));
    }
    ensure!(violations == 0, "{violations} bypass violations during verification");
    for n in &notes {
        println!("     bypass rate compile/run: {n}");
    }
    Ok("0 violations in runs and verification sweeps; lookup_table run-time rate >= 0.98".into())
}

/// About two million instructions, mostly ALU work.
fn threshold_workload() -> String {
    let mut s = String::from("data acc = [0 x 2]\nfn main {\nA:  mov r10, 0\n    mov r12, 40000\n    mov r1, 0\nL:  add r1, r1, r10\n");
    for i in 1..=20 {
        s += &format!("    xor r2, r1, {i}\n    add r1, r2, r10\n");
    }
    s + "    store r1, acc, 0\n    add r10, r10, 1\n    blt r10, r12, L\nE:  store r1, acc, 4\n    halt\n}\n"
}

fn threshold_comparison() -> Check {
    let p = parse_program(&threshold_workload()).map_err(e)?;
    let r = form_regions(&p, 40).map_err(e)?;
    let fast_golden = interpret_reference(&r.program, 10_000_000).map_err(e)?;
    let nvp_golden = interpret_reference(&p, 10_000_000).map_err(e)?;
    let mut worst = f64::INFINITY;
    for outages in [20, 400] {
        for seed in 0..5 {
            let trace = gen_trace(&TraceSpec::new(outages, 3.3, seed)).map_err(e)?;
            let dips = trace.dips_below(1.8);
            ensure!(dips == outages as usize, "{outages}/30 s seed {seed}: {dips} dips below 1.8 V");
            let fast = simulate(&r, &trace, &SimConfig::default()).map_err(e)?;
            let nvp = simulate_nvp(&p, &trace, &NvpConfig::default()).map_err(e)?;
            let tag = format!("{outages}/30 s seed {seed}");
            ensure!(fast.status == Completion::Completed && nvp.status == Completion::Completed, "{tag}: {:?} {:?}", fast.status, nvp.status);
            ensure!(fast.memory == fast_golden.memory && nvp.memory == nvp_golden.memory, "{tag}: wrong result");
            ensure!(fast.completion_ns <= nvp.completion_ns, "{tag}: {} ns vs NVP {} ns", fast.completion_ns, nvp.completion_ns);
            ensure!(fast.on_fraction() > nvp.on_fraction(), "{tag}: on fraction {} vs NVP {}", fast.on_fraction(), nvp.on_fraction());
            worst = worst.min(nvp.completion_ns as f64 / fast.completion_ns as f64);
        }
    }
    Ok(format!("10 traces, {} instructions; NVP takes at least {worst:.2}x as long", fast_golden.instructions))
}

fn energy_accounting() -> Check {
    let (_, stagnating) = stagnation_runs()?;
    let r = compile(&threshold_workload(), 40)?;
    let trace = gen_trace(&TraceSpec::new(400, 3.3, 1)).map_err(e)?;
    let long = run(&r, &trace, MachineConfig::default())?;
    let want: BTreeSet<&str> = [
        "phase1-success",
        "phase1-misspec",
        "phase2-success",
        "phase2-misspec",
        "compute-success",
        "compute-misspec",
        "no-ilp",
        "re-exec",
        "sleep-wakeup",
        "search",
    ]
    .into();
    let mut nonzero = BTreeSet::new();
    for res in [&stagnating, &long] {
        let total = res.energy.total();
        let logged: u64 = res.events.iter().map(|ev| ev.energy_fj).sum();
        ensure!(logged == total, "event log sums to {logged} fJ, meter {total} fJ");
        let mut csv = Vec::new();
        report::write_energy_csv(&res.energy, &mut csv).map_err(e)?;
        let mut rdr = csv::Reader::from_reader(&csv[..]);
        let (mut names, mut fj, mut uj, mut frac) = (BTreeSet::new(), 0u64, 0.0, 0.0);
        for row in rdr.records() {
            let row = row.map_err(e)?;
            ensure!(names.insert(row[0].to_string()), "category {} listed twice", &row[0]);
            fj += row[1].parse::<u64>().map_err(e)?;
            uj += row[2].parse::<f64>().map_err(e)?;
            frac += row[3].parse::<f64>().map_err(e)?;
        }
        ensure!(names.iter().map(String::as_str).collect::<BTreeSet<_>>() == want, "categories {names:?}");
        ensure!(fj == total, "CSV sums to {fj} fJ, meter {total} fJ");
        let total_uj = total as f64 * 1e-9;
        ensure!((uj - total_uj).abs() <= 1e-9 * total_uj, "CSV sums to {uj} µJ, meter {total_uj} µJ");
        ensure!((frac - 1.0).abs() <= 1e-9, "fractions sum to {frac}");
        nonzero.extend(Category::ALL.into_iter().filter(|&c| res.energy.get(c) > 0).map(Category::name));
    }
    Ok(format!("event logs match the meter exactly; CSVs have the 10 categories; non-zero: {}", nonzero.into_iter().collect::<Vec<_>>().join(" ")))
}

fn icsim(args: &[&str], dir: &Path) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_icsim")).args(args).current_dir(dir).output().map_err(e)?;
    ensure!(out.status.code().is_some_and(|c| c == 0 || c == 2), "icsim {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    Ok(out.stdout)
}

fn determinism() -> Check {
    let corpus_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus");
    let prog = corpus_dir.join("checksum.ir");
    let prog = prog.to_str().ok_or("non-UTF-8 path")?;
    let commands: [&[&str]; 8] = [
        &["gen-trace", "--outages", "20", "--duration-s", "0.01", "--seed", "7", "-o", "trace.csv"],
        &["compile", prog, "-o", "compiled.ir", "--regions", "regions.json"],
        &["run", prog, "--trace", "trace.csv", "-o", "run.json", "--energy", "energy.csv", "--events", "events.jsonl", "--nvm-out", "nvm.bin"],
        &["run", prog, "--trace", "trace.csv", "--dma", "4", "--ilp", "off", "--protocol", "one-bit", "--search", "cam"],
        &["verify", prog, "-o", "verify.json"],
        &["verify", prog, "--naive", "--single-failure"],
        &["compare", prog, "--trace", "trace.csv", "-o", "compare.csv"],
        &["compile", prog, "--sb-size", "16"],
    ];
    let (a, b) = (tempfile::tempdir().map_err(e)?, tempfile::tempdir().map_err(e)?);
    for cmd in commands {
        let (sa, sb) = (icsim(cmd, a.path())?, icsim(cmd, b.path())?);
        ensure!(sa == sb, "stdout of {cmd:?} differs");
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(a.path()).map_err(e)? {
        let name = entry.map_err(e)?.file_name();
        let (fa, fb) = (fs::read(a.path().join(&name)).map_err(e)?, fs::read(b.path().join(&name)).map_err(e)?);
        ensure!(!fa.is_empty() && fa == fb, "{} differs between runs", name.to_string_lossy());
        files.push(name.to_string_lossy().into_owned());
    }
    files.sort();
    ensure!(files.len() == 9, "expected 9 output files, found {files:?}");
    Ok(format!("8 commands, stdout and {} files byte-identical", files.len()))
}

fn describe(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("crash consistency", crash_consistency),
        ("naive inconsistency", naive_reproduction),
        ("region budget", region_budget),
        ("ILP overlap", ilp_property),
        ("DMA factor", dma_factor),
        ("watchdog and stagnation", watchdog_stagnation),
        ("bypass soundness", bypass_soundness),
        ("threshold comparison", threshold_comparison),
        ("energy accounting", energy_accounting),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = std::panic::catch_unwind(check).unwrap_or_else(|p| Err(describe(p)));
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

