// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

use alloc::vec::Vec;

use super::{status, NvmImage, Protocol};

/// One atomic NVM update of a release.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReleaseOp {
    Status(u32),
    /// Write store-buffer entry `i` to proxy slot `i`.
    Proxy(usize),
    /// Write the number of proxy entries.
    Count,
    /// Copy proxy entry `i` to its home address.
    Copy(usize),
}

/// Micro-op sequence releasing `n` entries.
///
/// Two-bit: `DRAINING, proxy x n, count, COPYING, copy x n, IDLE`.
/// One-bit: `proxy x n, count, set, copy x n, clear`.
pub fn release_ops(protocol: Protocol, n: usize) -> Vec<ReleaseOp> {
    let mut ops = Vec::with_capacity(2 * n + 4);
    match protocol {
        Protocol::TwoBit => {
            ops.push(ReleaseOp::Status(status::DRAINING));
            ops.extend((0..n).map(ReleaseOp::Proxy));
            ops.push(ReleaseOp::Count);
            ops.push(ReleaseOp::Status(status::COPYING));
            ops.extend((0..n).map(ReleaseOp::Copy));
            ops.push(ReleaseOp::Status(status::IDLE));
        }
        Protocol::OneBit => {
            ops.extend((0..n).map(ReleaseOp::Proxy));
            ops.push(ReleaseOp::Count);
            ops.push(ReleaseOp::Status(status::BIT_SET));
            ops.extend((0..n).map(ReleaseOp::Copy));
            ops.push(ReleaseOp::Status(status::BIT_CLEAR));
        }
    }
    ops
}

impl ReleaseOp {
    /// Phase 1 ends with the write that makes the proxy authoritative.
    pub fn phase(self, protocol: Protocol) -> u8 {
        match self {
            ReleaseOp::Proxy(_) | ReleaseOp::Count => 1,
            ReleaseOp::Copy(_) => 2,
            ReleaseOp::Status(s) if protocol.must_redo(s) => 1,
            ReleaseOp::Status(s) if s == protocol.idle() => 2,
            ReleaseOp::Status(_) => 1,
        }
    }

    /// The write after which the release survives a power failure.
    pub fn is_commit(self, protocol: Protocol) -> bool {
        matches!(self, ReleaseOp::Status(s) if protocol.must_redo(s))
    }

    pub fn is_copy(self) -> bool {
        matches!(self, ReleaseOp::Copy(_))
    }

    /// Applies the op. `entries` are `(NVM word index, value)` pairs in
    /// commit order; `end_index` is the dynamic instruction index the
    /// release commits.
    pub fn apply(self, nvm: &mut NvmImage, protocol: Protocol, entries: &[(u32, u32)], end_index: u64) {
        let layout = nvm.layout;
        match self {
            ReleaseOp::Status(s) => {
                nvm.words[layout.status()] = s;
                if protocol.must_redo(s) {
                    nvm.committed_index = end_index;
                }
            }
            ReleaseOp::Proxy(i) => {
                let at = layout.proxy_entry(i);
                nvm.words[at] = entries[i].0;
                nvm.words[at + 1] = entries[i].1;
            }
            ReleaseOp::Count => nvm.words[layout.proxy_count()] = entries.len() as u32,
            ReleaseOp::Copy(i) => copy_entry(nvm, i),
        }
    }
}

/// Phase-2 copy of proxy entry `i`, reading the proxy from NVM.
pub(crate) fn copy_entry(nvm: &mut NvmImage, i: usize) {
    let (addr, value) = nvm.proxy(i);
    nvm.words[addr as usize] = value;
}
