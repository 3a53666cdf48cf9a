// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! File formats, configuration and the command-line front end around
//! `icsim-core`.

pub mod cli;
pub mod config;
pub mod parallel;
pub mod report;
pub mod snapshot;
pub mod trace_io;
