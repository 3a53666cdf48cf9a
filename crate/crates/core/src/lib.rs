// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Region-speculative intermittent execution for energy-harvesting
//! microcontrollers.
//!
//! The crate is split along the pipeline a program takes:
//!
//! * [`ir`] parses the word-addressed register IR, builds control-flow
//!   graphs, computes liveness and runs the failure-free reference
//!   interpreter that every crash-consistency check compares against.
//! * [`regionizer`] partitions functions into regions whose stores fit in
//!   half of the store buffer, inserts live-out checkpoint stores and marks
//!   loads that may skip the store-buffer search.
//! * [`machine`] is the in-order, cache-less core with its split store
//!   buffer, background release and cycle/energy accounting.
//! * [`persistence`] holds the NVM image, the failure-atomic two-phase
//!   release and the recovery protocol.
//! * [`power`] ingests or synthesizes voltage traces, gates the supply,
//!   runs the adaptive anti-stagnation controller and the NVP baseline.
//! * [`sim`] and [`verify`] drive whole runs and exhaustive failure
//!   injection.
//!
//! Everything here is `no_std` + `alloc`; file formats, threads and the
//! command line live in the companion `icsim` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod ir;
pub mod machine;
pub mod persistence;
pub mod power;
pub mod regionizer;
pub mod sim;
pub mod verify;

pub use error::{ParseError, RegionError, SimError};
pub use ir::{parse_program, GoldenState, Program};
pub use regionizer::{form_regions, Regionized};
pub use sim::{simulate, SimConfig, SimResult};
