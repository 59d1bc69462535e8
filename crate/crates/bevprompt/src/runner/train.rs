//! `train`: fit the prompted model (and baseline) on a generated dataset
//! directory.

use std::path::Path;

use anyhow::Result;
use bevprompt_core::grouping::Vocabulary;
use bevprompt_core::toytrain::{assemble_dataset, train_toy};

use crate::errors::from_core;
use crate::formats::{
    frames_from_records2d, frames_from_records3d, read_jsonl, save_checkpoint, train_report_json,
    Record2D, Record3D, TrainConfigJson,
};
use crate::manifest::{effective_seed, RunManifest};

pub fn run(config: Option<&Path>, data: &Path, out: &Path, threads: usize) -> Result<()> {
    let cfg_json: TrainConfigJson = crate::formats::read_config(config)?;
    let mut cfg = cfg_json.resolve()?;
    cfg.seed = effective_seed(cfg.seed)?;
    cfg.validate().map_err(from_core)?;

    let vocab = Vocabulary::roadside();
    let calib = crate::formats::read_calib(&data.join("calib.json"))?;
    let gt_records: Vec<Record3D> = read_jsonl(&data.join("gt.jsonl"))?;
    let det_records: Vec<Record2D> = read_jsonl(&data.join("det2d.jsonl"))?;
    let mut gts = frames_from_records3d(&gt_records, &vocab)?;
    let mut dets2d = frames_from_records2d(&det_records, &vocab)?;
    let n = gts.len().max(dets2d.len());
    gts.resize(n, Vec::new());
    dets2d.resize(n, Vec::new());

    let dataset = assemble_dataset(
        &calib,
        &gts,
        &dets2d,
        &cfg.model,
        cfg.prompt_source,
        cfg.score_filter,
        cfg.val_fraction,
    )
    .map_err(from_core)?;
    let (report, model) = train_toy(&dataset, &cfg).map_err(from_core)?;

    super::ensure_dir(out)?;
    std::fs::write(
        out.join("train_report.json"),
        serde_json::to_string_pretty(&train_report_json(&report))?,
    )?;
    save_checkpoint(&out.join("checkpoint"), &model, false)?;

    let resolved = serde_json::to_value(TrainConfigJson::resolved(&cfg))?;
    let mut inputs: Vec<std::path::PathBuf> = vec![
        data.join("calib.json"),
        data.join("gt.jsonl"),
        data.join("det2d.jsonl"),
    ];
    if let Some(c) = config {
        inputs.push(c.to_path_buf());
    }
    let input_refs: Vec<&Path> = inputs.iter().map(|p| p.as_path()).collect();
    RunManifest::new("train", resolved, &input_refs, cfg.seed, threads)?
        .write(&out.join("manifest.json"))?;
    Ok(())
}
