//! Simulated noisy detectors over ground-truth scenes.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::Result;
use crate::fmath;
use crate::geometry::{project_cuboid, Annotation3D, Box2D, CameraCalib, Cuboid3D};
use crate::grouping::Vocabulary;
use crate::rng::{self, Stream};

use super::{DetectorNoise2D, DetectorNoise3D};

/// A simulated 2D detection with provenance: the index of the ground-truth
/// object it came from, `None` for an injected false positive.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection2D {
    pub boxed: Box2D,
    pub source: Option<usize>,
}

/// Projects each ground-truth cuboid and perturbs it: center/size jitter,
/// misses, label confusion, plus uniformly placed spurious boxes. Scores
/// decrease with the jitter magnitude (exact detections score 1).
pub fn simulate_2d_detector(
    gts: &[Annotation3D],
    calib: &CameraCalib,
    noise: &DetectorNoise2D,
    seed: u64,
    frame_index: u64,
) -> Result<Vec<Detection2D>> {
    noise.validate()?;
    let vocab_len = Vocabulary::roadside().len() as u32;
    let mut rng = rng::derive_rng(seed, Stream::Noise2d, frame_index);
    let mut out = Vec::new();
    for (si, gt) in gts.iter().enumerate() {
        let Ok(proj) = project_cuboid(calib, &gt.cuboid, true) else {
            continue;
        };
        if noise.fn_rate > 0.0 && rng.random::<f64>() < noise.fn_rate {
            continue;
        }
        let dcx = rng::normal(&mut rng, 0.0, noise.center_sigma_px);
        let dcy = rng::normal(&mut rng, 0.0, noise.center_sigma_px);
        let dw = rng::normal(&mut rng, 0.0, noise.size_sigma_px);
        let dh = rng::normal(&mut rng, 0.0, noise.size_sigma_px);
        let [cx, cy] = proj.center();
        let w = f64::max(proj.width() + dw, 2.0);
        let h = f64::max(proj.height() + dh, 2.0);
        let raw = Box2D::new(
            cx + dcx - w / 2.0,
            cy + dcy - h / 2.0,
            cx + dcx + w / 2.0,
            cy + dcy + h / 2.0,
            gt.cuboid.label,
            1.0,
        );
        let Ok(raw) = raw else { continue };
        let Some(mut clipped) = raw.clipped(calib.image_width, calib.image_height) else {
            continue;
        };
        if noise.label_confusion > 0.0 && rng.random::<f64>() < noise.label_confusion {
            let offset = rng.random_range(1..vocab_len);
            clipped.label = (clipped.label + offset) % vocab_len;
        }
        let jitter = fmath::sqrt(dcx * dcx + dcy * dcy + dw * dw + dh * dh);
        clipped.score = (1.0 - jitter / 40.0).clamp(0.05, 1.0);
        out.push(Detection2D {
            boxed: clipped,
            source: Some(si),
        });
    }
    // Spurious detections, one Bernoulli draw per ground-truth object.
    if noise.fp_rate > 0.0 {
        for _ in 0..gts.len() {
            if rng.random::<f64>() >= noise.fp_rate {
                continue;
            }
            let w = rng::uniform(&mut rng, 20.0, 180.0);
            let h = rng::uniform(&mut rng, 20.0, 180.0);
            let cx = rng::uniform(&mut rng, 0.0, calib.image_width);
            let cy = rng::uniform(&mut rng, 0.0, calib.image_height);
            let label = rng.random_range(0..vocab_len);
            let score = rng::uniform(&mut rng, 0.3, 0.6);
            let Ok(raw) = Box2D::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0, label, score)
            else {
                continue;
            };
            if let Some(clipped) = raw.clipped(calib.image_width, calib.image_height) {
                out.push(Detection2D {
                    boxed: clipped,
                    source: None,
                });
            }
        }
    }
    Ok(out)
}

/// Perturbs ground truth in 3D parameter space: BEV position and yaw
/// jitter, multiplicative size noise, and a systematic shift along the
/// camera-to-object ground ray. Objects stay on the ground plane.
pub fn simulate_3d_detector(
    gts: &[Annotation3D],
    calib: &CameraCalib,
    noise: &DetectorNoise3D,
    seed: u64,
    frame_index: u64,
) -> Result<Vec<Cuboid3D>> {
    noise.validate()?;
    let mut rng = rng::derive_rng(seed, Stream::Noise3d, frame_index);
    let cam = calib.camera_center();
    let mut out = Vec::with_capacity(gts.len());
    for gt in gts {
        let c = &gt.cuboid;
        let dx = rng::normal(&mut rng, 0.0, noise.pos_sigma);
        let dy = rng::normal(&mut rng, 0.0, noise.pos_sigma);
        let dyaw = rng::normal(&mut rng, 0.0, noise.yaw_sigma);
        let mut dims = [c.w, c.h, c.l];
        let mut size_shift = 0.0;
        for d in dims.iter_mut() {
            let f = f64::max(1.0 + rng::normal(&mut rng, 0.0, noise.size_sigma), 0.2);
            size_shift += fmath::abs(f - 1.0) * *d;
            *d *= f;
        }
        // Depth bias along the BEV ray from the camera footprint.
        let (mut x, mut y) = (c.x + dx, c.y + dy);
        if noise.depth_bias != 0.0 {
            let rx = c.x - cam[0];
            let ry = c.y - cam[1];
            let norm = fmath::hypot2(rx, ry);
            if norm > 1e-9 {
                x += noise.depth_bias * rx / norm;
                y += noise.depth_bias * ry / norm;
            }
        }
        let magnitude = fmath::hypot2(dx, dy)
            + fmath::abs(dyaw)
            + size_shift
            + fmath::abs(noise.depth_bias);
        let score = (1.0 - magnitude / 8.0).clamp(0.05, 1.0);
        out.push(Cuboid3D::new(
            x,
            y,
            dims[1] / 2.0,
            dims[0],
            dims[1],
            dims[2],
            c.yaw + dyaw,
            c.label,
            score,
        )?);
    }
    Ok(out)
}
