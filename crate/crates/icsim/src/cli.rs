// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Subcommands of the `icsim` binary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use icsim_core::ir::{interpret_reference, print_program};
use icsim_core::machine::SearchScheme;
use icsim_core::persistence::Protocol;
use icsim_core::power::{gen_trace, simulate_nvp, PowerTrace, TraceSpec};
use icsim_core::sim::Completion;
use icsim_core::{form_regions, parse_program, simulate, Program, Regionized};

use crate::config::Config;
use crate::parallel::verify_parallel;
use crate::report::{self, CompareRow};
use crate::{snapshot, trace_io};

/// Exit status of a run that found a consistency violation.
pub const EXIT_COUNTEREXAMPLE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "icsim", version, about = "Intermittent-computing simulator with a speculative store buffer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SearchArg {
    Seq,
    Cam,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    TwoBit,
    OneBit,
}

/// Model options shared by every subcommand that builds a machine.
#[derive(Clone, Debug, Default, Args)]
pub struct ModelArgs {
    /// TOML configuration file; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Store-buffer entries (both halves).
    #[arg(long, value_name = "N")]
    pub sb_size: Option<usize>,
    /// Phase-2 copy speed-up; 1 copies with the CPU.
    #[arg(long, value_name = "FACTOR")]
    pub dma: Option<u64>,
    /// Overlap releases with execution of the next region.
    #[arg(long)]
    pub ilp: Option<Toggle>,
    /// Store-buffer search scheme.
    #[arg(long)]
    pub search: Option<SearchArg>,
    /// Release status protocol.
    #[arg(long)]
    pub protocol: Option<ProtocolArg>,
    /// No store buffer: stores go straight to NVM (shows the inconsistency
    /// the buffer prevents).
    #[arg(long)]
    pub naive: bool,
}

impl ModelArgs {
    pub fn config(&self) -> Result<Config> {
        let mut c = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(n) = self.sb_size {
            c.sb_size = n;
        }
        if let Some(f) = self.dma {
            c.timing.dma_factor = (f > 1).then_some(f);
        }
        if let Some(t) = self.ilp {
            c.ilp = t == Toggle::On;
        }
        if let Some(s) = self.search {
            c.energy.search = match s {
                SearchArg::Seq => SearchScheme::Sequential,
                SearchArg::Cam => SearchScheme::Cam,
            };
        }
        if let Some(p) = self.protocol {
            c.protocol = match p {
                ProtocolArg::TwoBit => Protocol::TwoBit,
                ProtocolArg::OneBit => Protocol::OneBit,
            };
        }
        c.naive |= self.naive;
        Ok(c)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partition a program into regions and print the annotated IR.
    Compile {
        input: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Annotated IR destination (default: stdout).
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Region report as JSON.
        #[arg(long, value_name = "FILE")]
        regions: Option<PathBuf>,
    },
    /// Simulate a program on a voltage trace.
    Run {
        input: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Voltage trace CSV (default: constant 3.5 V).
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        /// Result JSON destination (default: stdout).
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Energy breakdown CSV.
        #[arg(long, value_name = "FILE")]
        energy: Option<PathBuf>,
        /// Event log as JSON lines.
        #[arg(long, value_name = "FILE")]
        events: Option<PathBuf>,
        /// Final NVM image.
        #[arg(long, value_name = "FILE")]
        nvm_out: Option<PathBuf>,
    },
    /// Cut power at every point of a run and check the recovered result.
    Verify {
        input: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Skip the second failure during each recovery.
        #[arg(long)]
        single_failure: bool,
        /// Report JSON destination (default: stdout).
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Completion time against the nonvolatile-processor baseline.
    Compare {
        input: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_name = "FILE")]
        trace: PathBuf,
        /// CSV destination (default: stdout).
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic harvested-voltage trace.
    GenTrace {
        /// Outages per 30 s.
        #[arg(long, default_value_t = 20)]
        outages: u32,
        /// Mean voltage while powered.
        #[arg(long, default_value_t = 3.3)]
        mean_v: f64,
        #[arg(long, default_value_t = 30.0)]
        duration_s: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV destination (default: stdout).
        #[arg(short, long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn sink<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(stdout),
    })
}

fn finish(mut w: Box<dyn Write + '_>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn load_program(path: &Path) -> Result<Program> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_program(&text).with_context(|| format!("parsing {}", path.display()))
}

fn regionize(p: &Program, c: &Config) -> Result<Regionized> {
    Ok(form_regions(p, c.sb_size)?)
}

fn program_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Runs one command and returns the process exit status.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<u8> {
    match cli.command {
        Command::Compile { input, model, out, regions } => {
            let c = model.config()?;
            let r = regionize(&load_program(&input)?, &c)?;
            let mut w = sink(out.as_deref(), stdout)?;
            w.write_all(print_program(&r.program).as_bytes())?;
            finish(w)?;
            if let Some(path) = regions {
                let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                report::write_regions_json(&r, BufWriter::new(f))?;
            }
            Ok(0)
        }
        Command::Run { input, model, trace, out, energy, events, nvm_out } => {
            let c = model.config()?;
            let r = regionize(&load_program(&input)?, &c)?;
            let trace = match trace {
                Some(p) => trace_io::load_trace(&p)?,
                None => PowerTrace::constant(3.5),
            };
            let mut sim = c.sim();
            sim.machine.record_events = events.is_some();
            let res = simulate(&r, &trace, &sim)?;
            if let Some(p) = &energy {
                let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
                report::write_energy_csv(&res.energy, BufWriter::new(f))?;
            }
            if let Some(p) = &events {
                let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
                report::write_events(&res.events, BufWriter::new(f))?;
            }
            if let (Some(p), Some(nvm)) = (&nvm_out, &res.nvm) {
                snapshot::save(nvm, p)?;
            }
            let w = sink(out.as_deref(), stdout)?;
            report::write_json(&res, w)?;
            Ok(0)
        }
        Command::Verify { input, model, single_failure, out } => {
            let c = model.config()?;
            let r = regionize(&load_program(&input)?, &c)?;
            let mut cfg = c.verify();
            cfg.double_failure &= !single_failure;
            let report = verify_parallel(&r, &program_name(&input), cfg)?;
            let w = sink(out.as_deref(), stdout)?;
            report::write_json(&report, w)?;
            Ok(if report.consistent() { 0 } else { EXIT_COUNTEREXAMPLE })
        }
        Command::Compare { input, model, trace, out } => {
            let c = model.config()?;
            let p = load_program(&input)?;
            let r = regionize(&p, &c)?;
            let trace = trace_io::load_trace(&trace)?;
            let speculative = simulate(&r, &trace, &c.sim())?;
            let nvp = simulate_nvp(&p, &trace, &c.nvp())?;
            // return addresses spilled to memory differ between the two
            // programs, so each is held to its own reference
            let speculative_ok = interpret_reference(&r.program, c.budget)?.memory == speculative.memory;
            let nvp_ok = interpret_reference(&p, c.budget)?.memory == nvp.memory;
            let rows = [CompareRow::new("speculative", &speculative, speculative_ok), CompareRow::new("nvp", &nvp, nvp_ok)];
            let w = sink(out.as_deref(), stdout)?;
            report::write_compare_csv(&rows, w)?;
            let wrong = rows.iter().any(|row| row.status == Completion::Completed && !row.matches_golden);
            Ok(if wrong { EXIT_COUNTEREXAMPLE } else { 0 })
        }
        Command::GenTrace { outages, mean_v, duration_s, seed, out } => {
            let params = TraceSpec { outages, mean_on_v: mean_v, duration_s, seed };
            let t = gen_trace(&params)?;
            let w = sink(out.as_deref(), stdout)?;
            trace_io::write_trace(&t, w)?;
            Ok(0)
        }
    }
}

