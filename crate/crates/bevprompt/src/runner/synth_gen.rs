//! `synth-gen`: deterministic scene generation plus simulated detections.

use std::path::Path;

use anyhow::Result;
use bevprompt_core::grouping::Vocabulary;
use bevprompt_core::synth::{gen_scene, simulate_2d_detector, simulate_3d_detector};

use crate::errors::from_core;
use crate::formats::{
    records2d_from_frames, records3d_from_frames, write_calib, write_jsonl, NoiseConfig2DJson,
    NoiseConfig3DJson, SceneConfigJson, SynthConfigJson,
};
use crate::manifest::{effective_seed, RunManifest};
use crate::threads::par_map_indexed;

pub fn run(config: Option<&Path>, out: &Path, threads: usize) -> Result<()> {
    let cfg: SynthConfigJson = crate::formats::read_config(config)?;
    let (mut scene, noise2d, noise3d) = cfg.resolve();
    scene.seed = effective_seed(scene.seed)?;
    scene.validate().map_err(from_core)?;
    noise2d.validate().map_err(from_core)?;
    noise3d.validate().map_err(from_core)?;

    super::ensure_dir(out)?;
    let results = par_map_indexed(threads, scene.n_frames, |frame| {
        let (calib, gts) = gen_scene(&scene, frame as u64)?;
        let det2d = simulate_2d_detector(&gts, &calib, &noise2d, scene.seed, frame as u64)?;
        let det3d = simulate_3d_detector(&gts, &calib, &noise3d, scene.seed, frame as u64)?;
        Ok::<_, bevprompt_core::Error>((calib, gts, det2d, det3d))
    });

    let mut gts = Vec::with_capacity(scene.n_frames);
    let mut dets2d = Vec::with_capacity(scene.n_frames);
    let mut dets3d = Vec::with_capacity(scene.n_frames);
    let mut calib = None;
    for r in results {
        let (c, g, d2, d3) = r.map_err(from_core)?;
        gts.push(g);
        dets2d.push(d2.into_iter().map(|d| d.boxed).collect::<Vec<_>>());
        dets3d.push(
            d3.into_iter()
                .map(bevprompt_core::geometry::Annotation3D::untagged)
                .collect::<Vec<_>>(),
        );
        calib = Some(c);
    }
    let calib = calib.expect("n_frames validated positive");
    let vocab = Vocabulary::roadside();

    write_calib(&out.join("calib.json"), &calib)?;
    write_jsonl(&out.join("gt.jsonl"), &records3d_from_frames(&gts, &vocab)?)?;
    write_jsonl(
        &out.join("det2d.jsonl"),
        &records2d_from_frames(&dets2d, &vocab)?,
    )?;
    write_jsonl(
        &out.join("det3d.jsonl"),
        &records3d_from_frames(&dets3d, &vocab)?,
    )?;

    let resolved = serde_json::json!({
        "scene": SceneConfigJson::resolved(&scene),
        "noise2d": NoiseConfig2DJson::resolved(&noise2d),
        "noise3d": NoiseConfig3DJson::resolved(&noise3d),
    });
    let inputs: Vec<&Path> = config.into_iter().collect();
    RunManifest::new("synth-gen", resolved, &inputs, scene.seed, threads)?
        .write(&out.join("manifest.json"))?;
    Ok(())
}
