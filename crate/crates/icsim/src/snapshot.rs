// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! NVM images on disk.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use icsim_core::persistence::NvmImage;

pub fn save(nvm: &NvmImage, path: &Path) -> Result<()> {
    std::fs::write(path, nvm.to_bytes()).with_context(|| format!("writing {}", path.display()))
}

pub fn load(path: &Path) -> Result<NvmImage> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    NvmImage::from_bytes(&bytes).ok_or_else(|| anyhow!("{} is not an NVM image", path.display()))
}
