//! Synthetic training/validation frames with prompts, features and targets.

use alloc::vec::Vec;

use crate::error::Result;
use crate::fmath;
use crate::fusion::ImageFeature;
use crate::geometry::{
    iou_aabb, project_cuboid, project_point, Annotation3D, Box2D, CameraCalib, Cuboid3D,
};
use crate::synth::{
    gen_scene, render_toy_features, simulate_2d_detector, DetectorNoise2D, SceneConfig,
};

use super::{ModelConfig, PromptSource, DEPTH_SCALE, SIZE_SCALE};

/// Minimum IoU between a 2D detection and a projected ground-truth box for
/// the detection to receive that object's regression target.
pub const TARGET_MATCH_IOU: f64 = 0.3;

/// One supervised example: a prompt box and the scaled regression target of
/// its matched object.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainExample {
    pub det: Box2D,
    pub target: [f64; 6],
    /// Unscaled ground-truth values for error reporting:
    /// (depth m, yaw rad, (w, h, l) m).
    pub truth: (f64, f64, [f64; 3]),
}

/// One frame: rendered features plus its supervised examples.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainFrame {
    pub features: ImageFeature,
    pub examples: Vec<TrainExample>,
    /// Pixel dimensions for prompt normalization.
    pub image_size: (f64, f64),
}

/// Train/validation split (by frame index: the tail fraction validates).
#[derive(Clone, Debug, PartialEq)]
pub struct SynthDataset {
    pub train: Vec<TrainFrame>,
    pub val: Vec<TrainFrame>,
    pub calib: CameraCalib,
}

fn regression_target(
    gt: &Cuboid3D,
    calib: &CameraCalib,
) -> Result<([f64; 6], (f64, f64, [f64; 3]))> {
    let (_, depth) = project_point(calib, [gt.x, gt.y, gt.z])?;
    let target = [
        depth / DEPTH_SCALE,
        fmath::sin(gt.yaw),
        fmath::cos(gt.yaw),
        gt.w / SIZE_SCALE,
        gt.h / SIZE_SCALE,
        gt.l / SIZE_SCALE,
    ];
    Ok((target, (depth, gt.yaw, [gt.w, gt.h, gt.l])))
}

/// Greedy one-to-one assignment of detections to projected ground truth by
/// descending IoU (label-agnostic: a detection with a confused label still
/// regresses its underlying object). Unassigned detections are dropped.
fn assign_targets(
    dets: &[Box2D],
    gts: &[Annotation3D],
    calib: &CameraCalib,
    score_filter: f64,
) -> Result<Vec<TrainExample>> {
    let projections: Vec<Option<Box2D>> = gts
        .iter()
        .map(|g| project_cuboid(calib, &g.cuboid, true).ok())
        .collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (di, det) in dets.iter().enumerate() {
        if det.score < score_filter {
            continue;
        }
        for (gi, proj) in projections.iter().enumerate() {
            if let Some(p) = proj {
                let iou = iou_aabb(det, p);
                if iou >= TARGET_MATCH_IOU {
                    pairs.push((iou, di, gi));
                }
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut det_used = alloc::vec![false; dets.len()];
    let mut gt_used = alloc::vec![false; gts.len()];
    let mut assignment: Vec<(usize, usize)> = Vec::new();
    for (_, di, gi) in pairs {
        if det_used[di] || gt_used[gi] {
            continue;
        }
        det_used[di] = true;
        gt_used[gi] = true;
        assignment.push((di, gi));
    }
    assignment.sort_by_key(|&(di, _)| di);
    let mut out = Vec::with_capacity(assignment.len());
    for (di, gi) in assignment {
        let (target, truth) = regression_target(&gts[gi].cuboid, calib)?;
        out.push(TrainExample {
            det: dets[di].clone(),
            target,
            truth,
        });
    }
    Ok(out)
}

/// Builds the dataset from per-frame ground truth and 2D detections (the
/// file-backed path). Training prompts come from `prompt_source`
/// (ground-truth mode projects the cuboids instead of using the
/// detections); validation prompts always come from the detections.
pub fn assemble_dataset(
    calib: &CameraCalib,
    gts: &[Vec<Annotation3D>],
    dets2d: &[Vec<Box2D>],
    model_cfg: &ModelConfig,
    prompt_source: PromptSource,
    score_filter: f64,
    val_fraction: f64,
) -> Result<SynthDataset> {
    if gts.len() != dets2d.len() {
        return Err(crate::error::Error::ShapeMismatch {
            op: "assemble_dataset frame counts",
            lhs: alloc::vec![gts.len()],
            rhs: alloc::vec![dets2d.len()],
        });
    }
    if gts.is_empty() {
        return Err(crate::error::Error::Config {
            message: alloc::string::String::from("dataset needs at least one frame"),
        });
    }
    let n = gts.len();
    let n_val = (((n as f64) * val_fraction) as usize).clamp(1, n.saturating_sub(1).max(1));
    let n_train = n - n_val;

    let mut train = Vec::with_capacity(n_train);
    let mut val = Vec::with_capacity(n_val);
    for frame in 0..n {
        let features = render_toy_features(
            &gts[frame],
            calib,
            model_cfg.grid_h,
            model_cfg.grid_w,
            model_cfg.channels,
        )?;
        let is_val = frame >= n_train;
        let use_predicted = is_val || prompt_source == PromptSource::Predicted;
        let examples = if use_predicted {
            assign_targets(&dets2d[frame], &gts[frame], calib, score_filter)?
        } else {
            let mut out = Vec::new();
            for gt in &gts[frame] {
                let Ok(boxed) = project_cuboid(calib, &gt.cuboid, true) else {
                    continue;
                };
                let (target, truth) = regression_target(&gt.cuboid, calib)?;
                out.push(TrainExample {
                    det: boxed,
                    target,
                    truth,
                });
            }
            out
        };
        let frame_data = TrainFrame {
            features,
            examples,
            image_size: (calib.image_width, calib.image_height),
        };
        if is_val {
            val.push(frame_data);
        } else {
            train.push(frame_data);
        }
    }
    Ok(SynthDataset {
        train,
        val,
        calib: calib.clone(),
    })
}

/// Generation-backed dataset: synthesizes the scenes and the simulated 2D
/// detections, then assembles them like the file-backed path.
pub fn build_dataset(
    scene_cfg: &SceneConfig,
    noise2d: &DetectorNoise2D,
    model_cfg: &ModelConfig,
    prompt_source: PromptSource,
    score_filter: f64,
    val_fraction: f64,
    detector_seed: u64,
) -> Result<SynthDataset> {
    scene_cfg.validate()?;
    noise2d.validate()?;
    let mut gts = Vec::with_capacity(scene_cfg.n_frames);
    let mut dets2d = Vec::with_capacity(scene_cfg.n_frames);
    let mut calib_out = None;
    for frame in 0..scene_cfg.n_frames {
        let (calib, anns) = gen_scene(scene_cfg, frame as u64)?;
        let dets = simulate_2d_detector(&anns, &calib, noise2d, detector_seed, frame as u64)?;
        dets2d.push(dets.into_iter().map(|d| d.boxed).collect::<Vec<_>>());
        gts.push(anns);
        calib_out = Some(calib);
    }
    let calib = calib_out.expect("n_frames validated positive");
    let model_cfg = model_cfg.clone();
    assemble_dataset(
        &calib,
        &gts,
        &dets2d,
        &model_cfg,
        prompt_source,
        score_filter,
        val_fraction,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_by_frame_index_and_deterministic() {
        let scene = SceneConfig {
            n_frames: 20,
            ..SceneConfig::default()
        };
        let mc = ModelConfig::default();
        let a = build_dataset(
            &scene,
            &DetectorNoise2D::zero(),
            &mc,
            PromptSource::Predicted,
            0.3,
            0.25,
            7,
        )
        .unwrap();
        assert_eq!(a.train.len(), 15);
        assert_eq!(a.val.len(), 5);
        let b = build_dataset(
            &scene,
            &DetectorNoise2D::zero(),
            &mc,
            PromptSource::Predicted,
            0.3,
            0.25,
            7,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_noise_assignment_recovers_every_object() {
        let scene = SceneConfig {
            n_frames: 6,
            ..SceneConfig::default()
        };
        let mc = ModelConfig::default();
        let ds = build_dataset(
            &scene,
            &DetectorNoise2D::zero(),
            &mc,
            PromptSource::Predicted,
            0.3,
            0.25,
            7,
        )
        .unwrap();
        for (i, f) in ds.train.iter().chain(&ds.val).enumerate() {
            let (_, gts) = gen_scene(&scene, i as u64).unwrap();
            assert_eq!(f.examples.len(), gts.len(), "frame {i}");
        }
    }

    #[test]
    fn ground_truth_prompts_only_affect_training_frames() {
        let scene = SceneConfig {
            n_frames: 8,
            ..SceneConfig::default()
        };
        let mc = ModelConfig::default();
        let noise = DetectorNoise2D {
            center_sigma_px: 6.0,
            size_sigma_px: 4.0,
            ..DetectorNoise2D::zero()
        };
        let pred =
            build_dataset(&scene, &noise, &mc, PromptSource::Predicted, 0.3, 0.25, 7).unwrap();
        let grnd =
            build_dataset(&scene, &noise, &mc, PromptSource::GroundTruth, 0.3, 0.25, 7).unwrap();
        // Validation frames identical (always predicted prompts)...
        assert_eq!(pred.val, grnd.val);
        // ... while training prompts differ.
        assert_ne!(pred.train, grnd.train);
        // Ground-truth prompts score 1 everywhere.
        for f in &grnd.train {
            for e in &f.examples {
                assert_eq!(e.det.score, 1.0);
            }
        }
    }

    #[test]
    fn targets_carry_matched_truth() {
        let scene = SceneConfig {
            n_frames: 4,
            ..SceneConfig::default()
        };
        let mc = ModelConfig::default();
        let ds = build_dataset(
            &scene,
            &DetectorNoise2D::zero(),
            &mc,
            PromptSource::Predicted,
            0.3,
            0.25,
            7,
        )
        .unwrap();
        for f in ds.train.iter().chain(&ds.val) {
            for e in &f.examples {
                let (depth, yaw, dims) = e.truth;
                assert!((e.target[0] - depth / DEPTH_SCALE).abs() < 1e-15);
                assert!((e.target[1] - yaw.sin()).abs() < 1e-15);
                assert!((e.target[3] - dims[0] / SIZE_SCALE).abs() < 1e-15);
            }
        }
    }
}
