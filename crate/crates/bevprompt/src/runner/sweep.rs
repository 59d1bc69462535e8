//! `sweep`: 2D-detector quality vs 3D validation error.

use std::path::Path;

use anyhow::Result;
use bevprompt_core::toytrain::sweep_prompt_quality;

use crate::errors::{from_core, CliError};
use crate::formats::{
    sweep_report_json, NoiseConfig2DJson, SceneConfigJson, SweepConfigJson, TrainConfigJson,
};
use crate::manifest::{effective_seed, RunManifest};

pub fn run(config: &Path, out: &Path, threads: usize) -> Result<()> {
    let cfg_json: SweepConfigJson = crate::formats::read_config(Some(config))?;
    if cfg_json.noise_levels.is_empty() {
        return Err(CliError::schema("sweep config needs at least one noise level").into());
    }
    let scene = cfg_json.scene.clone().unwrap_or_default().resolve();
    let mut train = cfg_json.train.clone().unwrap_or_default().resolve()?;
    train.seed = effective_seed(train.seed)?;
    train.validate().map_err(from_core)?;
    let levels: Vec<_> = cfg_json.noise_levels.iter().map(|n| n.resolve()).collect();
    for level in &levels {
        level.validate().map_err(from_core)?;
    }

    let report = sweep_prompt_quality(&levels, &scene, &train).map_err(from_core)?;

    super::ensure_dir(out)?;
    std::fs::write(
        out.join("sweep_report.json"),
        serde_json::to_string_pretty(&sweep_report_json(&report))?,
    )?;
    let resolved = serde_json::json!({
        "scene": SceneConfigJson::resolved(&scene),
        "train": TrainConfigJson::resolved(&train),
        "noise_levels": levels.iter().map(NoiseConfig2DJson::resolved).collect::<Vec<_>>(),
    });
    RunManifest::new("sweep", resolved, &[config], train.seed, threads)?
        .write(&out.join("manifest.json"))?;
    Ok(())
}
