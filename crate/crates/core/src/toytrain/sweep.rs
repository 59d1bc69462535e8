//! Prompt-quality sweep: train at several 2D-detector noise levels and
//! correlate the detector's 2D mAP with the resulting 3D validation error.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{project_cuboid, Box2D};
use crate::grouping::{builtin_grouping, Strategy};
use crate::metrics::{map_coco_2d, EvalConfig};
use crate::synth::{gen_scene, simulate_2d_detector, DetectorNoise2D, SceneConfig};

use super::{build_dataset, train_toy, TrainConfig};

/// One sweep entry: the noise level, the simulated detector's 2D mAP on the
/// validation frames, and the trained model's validation depth error.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub noise: DetectorNoise2D,
    pub map_2d: Option<f64>,
    pub depth_mae: f64,
    pub yaw_mae: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// Spearman rank correlation between 2D mAP and negative depth error;
    /// absent for degenerate sweeps (fewer than two usable points or
    /// constant ranks).
    pub spearman: Option<f64>,
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = alloc::vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        // Average rank for ties (1-based).
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[idx[k]] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties; `None` for fewer
/// than two samples or zero rank variance on either side.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        num += (a - mean) * (b - mean);
        dx += (a - mean) * (a - mean);
        dy += (b - mean) * (b - mean);
    }
    if dx == 0.0 || dy == 0.0 {
        return None;
    }
    Some(num / crate::fmath::sqrt(dx * dy))
}

/// Measures the simulated detector's COCO mAP over the validation frames
/// (ground-truth 2D boxes are the projected cuboids).
pub fn measure_detector_map(
    scene_cfg: &SceneConfig,
    noise: &DetectorNoise2D,
    val_fraction: f64,
    detector_seed: u64,
    eval_cfg: &EvalConfig,
) -> Result<Option<f64>> {
    let n = scene_cfg.n_frames;
    let n_val = (((n as f64) * val_fraction) as usize).clamp(1, n.saturating_sub(1).max(1));
    let start = n - n_val;
    let mut gts2d: Vec<Vec<Box2D>> = Vec::new();
    let mut dets2d: Vec<Vec<Box2D>> = Vec::new();
    for frame in start..n {
        let (calib, gts) = gen_scene(scene_cfg, frame as u64)?;
        let mut frame_gts = Vec::new();
        for gt in &gts {
            if let Ok(b) = project_cuboid(&calib, &gt.cuboid, true) {
                frame_gts.push(b);
            }
        }
        let dets = simulate_2d_detector(&gts, &calib, noise, detector_seed, frame as u64)?;
        dets2d.push(dets.into_iter().map(|d| d.boxed).collect());
        gts2d.push(frame_gts);
    }
    let grouping = builtin_grouping(Strategy::Functionality);
    Ok(map_coco_2d(&gts2d, &dets2d, eval_cfg, &grouping)?.map)
}

/// Trains one model per noise level (both training and validation prompts
/// use that level) and reports the 2D-mAP-vs-3D-error trend.
pub fn sweep_prompt_quality(
    noise_levels: &[DetectorNoise2D],
    scene_cfg: &SceneConfig,
    cfg: &TrainConfig,
) -> Result<SweepReport> {
    if noise_levels.is_empty() {
        return Err(Error::Config {
            message: alloc::string::String::from("sweep needs at least one noise level"),
        });
    }
    let eval_cfg = EvalConfig::benchmark();
    let mut points = Vec::with_capacity(noise_levels.len());
    for noise in noise_levels {
        let dataset = build_dataset(
            scene_cfg,
            noise,
            &cfg.model,
            cfg.prompt_source,
            cfg.score_filter,
            cfg.val_fraction,
            cfg.seed,
        )?;
        let (report, _) = train_toy(&dataset, cfg)?;
        let map_2d =
            measure_detector_map(scene_cfg, noise, cfg.val_fraction, cfg.seed, &eval_cfg)?;
        points.push(SweepPoint {
            noise: noise.clone(),
            map_2d,
            depth_mae: report.val_prompted.depth_mae,
            yaw_mae: report.val_prompted.yaw_mae,
        });
    }
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.map_2d.map(|m| (m, -p.depth_mae)))
        .collect();
    let xs: Vec<f64> = usable.iter().map(|(x, _)| *x).collect();
    let ys: Vec<f64> = usable.iter().map(|(_, y)| *y).collect();
    Ok(SweepReport {
        points,
        spearman: spearman(&xs, &ys),
    })
}
