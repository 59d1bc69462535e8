//! Subcommand implementations behind the `bevprompt` binary.

pub mod bench;
pub mod derive2d;
pub mod eval;
pub mod fuse_trace;
pub mod sweep;
pub mod synth_gen;
pub mod train;
pub mod tune_yaw;

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

/// Creates an output directory (and parents).
pub(crate) fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating output dir {}", path.display()))
}
