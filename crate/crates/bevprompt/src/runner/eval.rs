//! `eval`: run the full metric stack over detection and annotation files.

use std::path::Path;

use anyhow::Result;
use bevprompt_core::geometry::project_cuboid;
use bevprompt_core::grouping::Vocabulary;
use bevprompt_core::metrics::evaluate;

use crate::errors::from_core;
use crate::formats::resolve_grouping;
use crate::formats::{
    eval_report_json, frames_from_records2d, frames_from_records3d, read_jsonl, write_pr_csv,
    EvalConfigJson, Record2D, Record3D,
};
use crate::manifest::RunManifest;

#[allow(clippy::too_many_arguments)]
pub fn run(
    gt: &Path,
    det3d: &Path,
    det2d: Option<&Path>,
    calib_path: &Path,
    config: Option<&Path>,
    report_path: &Path,
    pr_csv: Option<&Path>,
    threads: usize,
) -> Result<()> {
    let cfg_json: EvalConfigJson = crate::formats::read_config(config)?;
    let (cfg, grouping_name, axes) = cfg_json.resolve()?;
    cfg.validate().map_err(from_core)?;
    let grouping = resolve_grouping(&grouping_name)?;
    let vocab = Vocabulary::roadside();

    let gt_records: Vec<Record3D> = read_jsonl(gt)?;
    let det_records: Vec<Record3D> = read_jsonl(det3d)?;
    let mut gts = frames_from_records3d(&gt_records, &vocab)?;
    let mut det_frames = frames_from_records3d(&det_records, &vocab)?;
    let n = gts.len().max(det_frames.len());
    gts.resize(n, Vec::new());
    det_frames.resize(n, Vec::new());
    let dets: Vec<Vec<bevprompt_core::geometry::Cuboid3D>> = det_frames
        .into_iter()
        .map(|f| f.into_iter().map(|a| a.cuboid).collect())
        .collect();
    let calib = crate::formats::read_calib(calib_path)?;

    // 2D side: detections from file, ground truth derived by projection.
    let dets2d = match det2d {
        Some(path) => {
            let records: Vec<Record2D> = read_jsonl(path)?;
            let mut frames = frames_from_records2d(&records, &vocab)?;
            frames.resize(n, Vec::new());
            Some(frames)
        }
        None => None,
    };
    let gts2d = dets2d.as_ref().map(|_| {
        gts.iter()
            .map(|frame| {
                frame
                    .iter()
                    .filter_map(|a| project_cuboid(&calib, &a.cuboid, true).ok())
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    });

    let report = evaluate(
        &gts,
        &dets,
        gts2d.as_deref(),
        dets2d.as_deref(),
        &calib,
        &cfg,
        &grouping,
        &axes,
    )
    .map_err(from_core)?;

    if let Some(parent) = report_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(
        report_path,
        serde_json::to_string_pretty(&eval_report_json(&report))?,
    )?;
    if let Some(dir) = pr_csv {
        write_pr_csv(dir, &report)?;
    }

    let resolved = serde_json::to_value(EvalConfigJson::resolved(&cfg, &grouping_name, &axes))?;
    let mut inputs: Vec<&Path> = vec![gt, det3d, calib_path];
    if let Some(p) = det2d {
        inputs.push(p);
    }
    if let Some(c) = config {
        inputs.push(c);
    }
    let manifest_path = report_path.with_extension("manifest.json");
    RunManifest::new("eval", resolved, &inputs, 0, threads)?.write(&manifest_path)?;
    Ok(())
}
