// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: undefined label `{label}`")]
    UndefinedLabel { line: usize, label: String },
    #[error("line {line}: undefined symbol `{name}`")]
    UndefinedSymbol { line: usize, name: String },
    #[error("line {line}: undefined function `{name}`")]
    UndefinedFunction { line: usize, name: String },
    #[error("line {line}: register r{reg} out of range (r0..r15)")]
    RegisterOutOfRange { line: usize, reg: u64 },
    #[error("line {line}: duplicate definition of `{name}`")]
    Duplicate { line: usize, name: String },
    #[error("line {line}: instruction after terminator")]
    AfterTerminator { line: usize },
    #[error("line {line}: offset {offset} is not word aligned")]
    Misaligned { line: usize, offset: i64 },
    #[error("function `{function}` falls off its last block")]
    FallsOffEnd { function: String },
    #[error("function `{function}` has no blocks")]
    EmptyFunction { function: String },
    #[error("recursion through `{function}` is not supported")]
    Recursion { function: String },
    #[error("no entry function `main`")]
    NoEntry,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegionError {
    #[error("region formation did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("store buffer of {sb_size} entries leaves no room for checkpoints in `{function}`")]
    BudgetTooSmall { sb_size: usize, function: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("instruction budget of {budget} exceeded")]
    BudgetExceeded { budget: u64 },
    #[error("invalid memory access at pc {pc}: address {addr:#x}")]
    InvalidAddress { pc: u32, addr: u32 },
    #[error("store-buffer half overflow at pc {pc}: capacity {capacity}")]
    StoreBufferOverflow { pc: u32, capacity: usize },
    #[error("bypass load at pc {pc} hit a live store-buffer entry for {addr:#x}")]
    BypassViolation { pc: u32, addr: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("power trace error: {0}")]
    Trace(String),
}
