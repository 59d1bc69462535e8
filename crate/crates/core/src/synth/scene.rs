//! Frame generation: camera, object placement, occlusion/truncation tags.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{project_cuboid, project_point, Annotation3D, CameraCalib, Cuboid3D};
use crate::rng::{self, Stream};

use super::{rect_union_area, SceneConfig};

/// The scene-wide camera (fixed across frames, derived from the seed alone).
pub fn scene_calib(cfg: &SceneConfig) -> Result<CameraCalib> {
    cfg.validate()?;
    let mut rng = rng::derive_rng(cfg.seed, Stream::Camera, 0);
    let height = rng::uniform(&mut rng, cfg.camera_height.0, cfg.camera_height.1);
    let pitch = rng::uniform(&mut rng, cfg.camera_pitch.0, cfg.camera_pitch.1);
    CameraCalib::roadside(
        [0.0, 0.0, height],
        0.0,
        pitch,
        cfg.focal,
        cfg.focal,
        cfg.image_width / 2.0,
        cfg.image_height / 2.0,
        cfg.image_width,
        cfg.image_height,
    )
}

fn weighted_class(rng: &mut rand_chacha::ChaCha8Rng, weights: &[f64; 9]) -> u32 {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i as u32;
        }
    }
    (weights.len() - 1) as u32
}

/// Generates one frame: ground-truth cuboids on the lanes, all at least
/// partially visible, with occlusion and truncation tags.
pub fn gen_scene(cfg: &SceneConfig, frame_index: u64) -> Result<(CameraCalib, Vec<Annotation3D>)> {
    let calib = scene_calib(cfg)?;
    let mut rng = rng::derive_rng(cfg.seed, Stream::Placement, frame_index);
    let n_objects = rng.random_range(cfg.objects_min..=cfg.objects_max);

    let mut cuboids: Vec<Cuboid3D> = Vec::with_capacity(n_objects);
    for _ in 0..n_objects {
        let mut placed = false;
        for _ in 0..cfg.max_attempts {
            let label = weighted_class(&mut rng, &cfg.class_weights);
            let means = cfg.size_means[label as usize];
            let mut dims = [0.0f64; 3];
            for (d, &mean) in dims.iter_mut().zip(&means) {
                let sigma = cfg.size_sigma_frac * mean;
                *d = f64::max(rng::normal(&mut rng, mean, sigma), 0.3 * mean);
            }
            let lane_idx = rng.random_range(0..cfg.lane_offsets.len());
            let y = cfg.lane_offsets[lane_idx] + rng::normal(&mut rng, 0.0, cfg.lateral_jitter);
            let x = rng::uniform(&mut rng, cfg.x_range.0, cfg.x_range.1);
            let flip = rng.random::<f64>() < cfg.heading_flip_prob;
            let yaw = if flip { core::f64::consts::PI } else { 0.0 }
                + rng::normal(&mut rng, 0.0, cfg.yaw_jitter);
            let (w, h, l) = (dims[0], dims[1], dims[2]);
            let Ok(cuboid) = Cuboid3D::new(x, y, h / 2.0, w, h, l, yaw, label, 1.0) else {
                continue;
            };
            if project_cuboid(&calib, &cuboid, true).is_ok() {
                cuboids.push(cuboid);
                placed = true;
                break;
            }
        }
        if !placed && cuboids.is_empty() {
            return Err(Error::Generation {
                message: alloc::format!(
                    "no placeable objects after {} attempts",
                    cfg.max_attempts
                ),
            });
        }
    }
    let annotations = annotate_occlusion_truncation(&cuboids, &calib)?;
    Ok((calib, annotations))
}

/// Derives occlusion and truncation tags for a set of cuboids.
///
/// Occlusion: fraction of an object's clipped projected box covered by the
/// union of strictly nearer objects' clipped boxes. Truncation: fraction of
/// the unclipped projected box area lost to image clipping.
pub fn annotate_occlusion_truncation(
    cuboids: &[Cuboid3D],
    calib: &CameraCalib,
) -> Result<Vec<Annotation3D>> {
    struct Proj {
        clipped: (f64, f64, f64, f64),
        clipped_area: f64,
        full_area: f64,
        depth: f64,
    }
    let mut projs: Vec<Proj> = Vec::with_capacity(cuboids.len());
    for c in cuboids {
        let full = project_cuboid(calib, c, false)?;
        let clipped = project_cuboid(calib, c, true)?;
        let (_, depth) = project_point(calib, [c.x, c.y, c.z])?;
        projs.push(Proj {
            clipped: (clipped.x_min, clipped.y_min, clipped.x_max, clipped.y_max),
            clipped_area: clipped.area(),
            full_area: full.area(),
            depth,
        });
    }
    let mut out = Vec::with_capacity(cuboids.len());
    for (i, c) in cuboids.iter().enumerate() {
        let nearer: Vec<(f64, f64, f64, f64)> = projs
            .iter()
            .enumerate()
            .filter(|(j, p)| *j != i && p.depth < projs[i].depth)
            .map(|(_, p)| p.clipped)
            .collect();
        let covered = rect_union_area(&nearer, projs[i].clipped);
        let occlusion = (covered / projs[i].clipped_area).clamp(0.0, 1.0);
        let truncation = (1.0 - projs[i].clipped_area / projs[i].full_area).clamp(0.0, 1.0);
        out.push(Annotation3D {
            cuboid: c.clone(),
            occlusion: Some(occlusion),
            truncation: Some(truncation),
        });
    }
    Ok(out)
}
