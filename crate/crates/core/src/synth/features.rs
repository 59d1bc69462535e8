//! Toy image-feature rendering: a stand-in for a learned image encoder.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::fusion::ImageFeature;
use crate::geometry::{project_cuboid, project_point, Annotation3D, CameraCalib};
use crate::grouping::Vocabulary;
use crate::numerics::Tensor;

use super::rect_union_area;

/// Channel layout: coverage, scaled inverse depth, one per fine class, then
/// sinusoidal position channels filling the remainder.
pub const FIXED_CHANNELS: usize = 2;

/// Renders per-cell features over an `grid_h x grid_w` partition of the
/// image: object-coverage fraction, mean scaled inverse depth of covering
/// objects, per-class coverage, and sinusoidal positional channels. The
/// grid must divide the image dimensions exactly and `channels` must leave
/// room for at least one positional channel.
pub fn render_toy_features(
    gts: &[Annotation3D],
    calib: &CameraCalib,
    grid_h: usize,
    grid_w: usize,
    channels: usize,
) -> Result<ImageFeature> {
    if grid_h == 0 || grid_w == 0 {
        return Err(Error::Config {
            message: alloc::format!("grid {grid_h} x {grid_w} must be positive"),
        });
    }
    let cell_w = calib.image_width / grid_w as f64;
    let cell_h = calib.image_height / grid_h as f64;
    if fmath::abs(cell_w - fmath::round(cell_w)) > 1e-9
        || fmath::abs(cell_h - fmath::round(cell_h)) > 1e-9
    {
        return Err(Error::Config {
            message: alloc::format!(
                "grid {grid_h} x {grid_w} must divide the image {} x {}",
                calib.image_width,
                calib.image_height
            ),
        });
    }
    let n_classes = Vocabulary::roadside().len();
    let min_channels = FIXED_CHANNELS + n_classes + 1;
    if channels < min_channels {
        return Err(Error::Config {
            message: alloc::format!("need at least {min_channels} channels, got {channels}"),
        });
    }

    struct Obj {
        rect: (f64, f64, f64, f64),
        inv_depth: f64,
        label: usize,
    }
    let mut objs: Vec<Obj> = Vec::new();
    for gt in gts {
        let Ok(b) = project_cuboid(calib, &gt.cuboid, true) else {
            continue;
        };
        let (_, depth) = project_point(calib, [gt.cuboid.x, gt.cuboid.y, gt.cuboid.z])?;
        objs.push(Obj {
            rect: (b.x_min, b.y_min, b.x_max, b.y_max),
            inv_depth: 10.0 / depth,
            label: gt.cuboid.label as usize,
        });
    }

    let s = grid_h * grid_w;
    let mut data = vec![0.0f64; s * channels];
    for gy in 0..grid_h {
        for gx in 0..grid_w {
            let cell = (
                gx as f64 * cell_w,
                gy as f64 * cell_h,
                (gx + 1) as f64 * cell_w,
                (gy + 1) as f64 * cell_h,
            );
            let cell_area = cell_w * cell_h;
            let row = (gy * grid_w + gx) * channels;

            let rects: Vec<(f64, f64, f64, f64)> = objs.iter().map(|o| o.rect).collect();
            let coverage = rect_union_area(&rects, cell) / cell_area;
            data[row] = coverage;

            let mut inv_depth_sum = 0.0;
            let mut covering = 0usize;
            for o in &objs {
                let overlap = rect_union_area(&[o.rect], cell);
                if overlap > 0.0 {
                    inv_depth_sum += o.inv_depth;
                    covering += 1;
                    let frac = overlap / cell_area;
                    let slot = row + FIXED_CHANNELS + o.label;
                    data[slot] = f64::max(data[slot], frac);
                }
            }
            if covering > 0 {
                data[row + 1] = inv_depth_sum / covering as f64;
            }

            let u = (gx as f64 + 0.5) / grid_w as f64;
            let v = (gy as f64 + 0.5) / grid_h as f64;
            for p in 0..channels - FIXED_CHANNELS - n_classes {
                let freq = (p / 2 + 1) as f64;
                let phase = 2.0 * core::f64::consts::PI * freq;
                data[row + FIXED_CHANNELS + n_classes + p] = if p % 2 == 0 {
                    fmath::sin(phase * u)
                } else {
                    fmath::cos(phase * v)
                };
            }
        }
    }
    ImageFeature::new(Tensor::from_vec(vec![s, channels], data)?, grid_h, grid_w)
}
