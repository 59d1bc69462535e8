//! `tune-yaw`: refine detection yaws against matched 2D boxes.

use std::path::Path;

use anyhow::Result;
use bevprompt_core::grouping::Vocabulary;
use bevprompt_core::yawtune::tune_frame;

use crate::errors::from_core;
use crate::formats::resolve_grouping;
use crate::formats::{
    frames_from_records2d, frames_from_records3d, read_jsonl, records3d_from_frames, tune_report_json,
    write_jsonl, Record2D, Record3D, TunePairJson, YawTuneConfigJson,
};
use crate::manifest::RunManifest;
use crate::threads::par_map_indexed;

pub fn run(
    det3d: &Path,
    det2d: &Path,
    calib_path: &Path,
    config: Option<&Path>,
    out: &Path,
    threads: usize,
) -> Result<()> {
    let cfg_json: YawTuneConfigJson = crate::formats::read_config(config)?;
    let (cfg, grouping_name) = cfg_json.resolve();
    cfg.validate().map_err(from_core)?;
    let grouping = resolve_grouping(&grouping_name)?;
    let vocab = Vocabulary::roadside();

    let records3d: Vec<Record3D> = read_jsonl(det3d)?;
    let records2d: Vec<Record2D> = read_jsonl(det2d)?;
    let mut frames3d = frames_from_records3d(&records3d, &vocab)?;
    let mut frames2d = frames_from_records2d(&records2d, &vocab)?;
    let n = frames3d.len().max(frames2d.len());
    frames3d.resize(n, Vec::new());
    frames2d.resize(n, Vec::new());
    let calib = crate::formats::read_calib(calib_path)?;

    let results = par_map_indexed(threads, n, |fi| {
        let cuboids: Vec<_> = frames3d[fi].iter().map(|a| a.cuboid.clone()).collect();
        tune_frame(&cuboids, &frames2d[fi], &calib, &grouping, &cfg)
    });

    let mut refined_frames = Vec::with_capacity(n);
    let mut pairs = Vec::new();
    for (fi, r) in results.into_iter().enumerate() {
        let (refined, report) = r.map_err(from_core)?;
        for p in report {
            pairs.push(TunePairJson {
                frame: fi as u64,
                cuboid_index: p.cuboid_index,
                box_index: p.box_index,
                yaw_before: p.yaw_before,
                yaw_after: p.yaw_after,
                iou_before: p.iou_before,
                iou_after: p.iou_after,
            });
        }
        refined_frames.push(
            refined
                .into_iter()
                .map(bevprompt_core::geometry::Annotation3D::untagged)
                .collect::<Vec<_>>(),
        );
    }

    super::ensure_dir(out)?;
    write_jsonl(
        &out.join("refined3d.jsonl"),
        &records3d_from_frames(&refined_frames, &vocab)?,
    )?;
    std::fs::write(
        out.join("tune_report.json"),
        serde_json::to_string_pretty(&tune_report_json(&pairs))?,
    )?;
    let resolved = serde_json::to_value(YawTuneConfigJson::resolved(&cfg, &grouping_name))?;
    let mut inputs: Vec<&Path> = vec![det3d, det2d, calib_path];
    if let Some(c) = config {
        inputs.push(c);
    }
    RunManifest::new("tune-yaw", resolved, &inputs, 0, threads)?
        .write(&out.join("manifest.json"))?;
    Ok(())
}
