//! `derive-2d`: project 3D cuboid annotations to 2D box annotations.

use std::path::Path;

use anyhow::Result;
use bevprompt_core::geometry::project_cuboid;
use bevprompt_core::grouping::Vocabulary;

use crate::formats::{
    frames_from_records3d, read_jsonl, records2d_from_frames, write_jsonl, Record3D,
};
use crate::manifest::RunManifest;

/// Projects every cuboid; objects that do not reach the image (behind the
/// camera or fully outside) produce no box.
pub fn run(gt: &Path, calib_path: &Path, out: &Path, clip: bool, threads: usize) -> Result<()> {
    let vocab = Vocabulary::roadside();
    let records: Vec<Record3D> = read_jsonl(gt)?;
    let frames = frames_from_records3d(&records, &vocab)?;
    let calib = crate::formats::read_calib(calib_path)?;

    let boxes: Vec<Vec<bevprompt_core::geometry::Box2D>> =
        crate::threads::par_map_indexed(threads, frames.len(), |fi| {
            frames[fi]
                .iter()
                .filter_map(|a| project_cuboid(&calib, &a.cuboid, clip).ok())
                .collect()
        });

    super::ensure_dir(out)?;
    write_jsonl(
        &out.join("gt2d.jsonl"),
        &records2d_from_frames(&boxes, &vocab)?,
    )?;
    let resolved = serde_json::json!({ "clip": clip });
    RunManifest::new("derive-2d", resolved, &[gt, calib_path], 0, threads)?
        .write(&out.join("manifest.json"))?;
    Ok(())
}
