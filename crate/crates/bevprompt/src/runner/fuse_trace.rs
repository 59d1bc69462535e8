//! `fuse-trace`: dump the per-step tensors of one fusion pass.

use std::path::Path;

use anyhow::Result;
use bevprompt_core::fusion::{fuse_trace, ImageFeature};

use crate::errors::{from_core, CliError};
use crate::formats::{load_checkpoint, read_tensor_auto, write_tensor_json};
use crate::manifest::RunManifest;

#[allow(clippy::too_many_arguments)]
pub fn run(
    checkpoint: &Path,
    prompts: &Path,
    image: &Path,
    grid_h: Option<usize>,
    grid_w: Option<usize>,
    out: &Path,
    threads: usize,
) -> Result<()> {
    let model = load_checkpoint(checkpoint)?;
    let e_tokens = read_tensor_auto(prompts)?;
    let i_raw = read_tensor_auto(image)?;
    let (s, _) = i_raw
        .dims2()
        .map_err(|_| CliError::schema("image feature tensor must be rank 2"))?;
    let (gh, gw) = match (grid_h, grid_w) {
        (Some(h), Some(w)) => (h, w),
        (None, None) => (1, s),
        _ => {
            return Err(CliError::schema("pass both --grid-h and --grid-w or neither").into());
        }
    };
    let feature = ImageFeature::new(i_raw, gh, gw).map_err(from_core)?;
    let trace = fuse_trace(&e_tokens, &feature, &model.fusion).map_err(from_core)?;

    super::ensure_dir(out)?;
    write_tensor_json(&out.join("f.json"), &trace.f)?;
    write_tensor_json(&out.join("g.json"), &trace.g)?;
    write_tensor_json(&out.join("h.json"), &trace.h)?;
    write_tensor_json(&out.join("j.json"), &trace.j)?;
    write_tensor_json(&out.join("image_projected.json"), &trace.image)?;

    let resolved = serde_json::json!({
        "grid_h": gh,
        "grid_w": gw,
        "step4_query_mode": model.fusion.cfg.step4_query.as_str(),
        "residuals": model.fusion.cfg.residual,
        "heads": model.fusion.cfg.heads,
        "d_model": model.fusion.cfg.d_model,
    });
    let inputs: Vec<&Path> = vec![prompts, image];
    RunManifest::new("fuse-trace", resolved, &inputs, 0, threads)?
        .write(&out.join("manifest.json"))?;
    Ok(())
}
