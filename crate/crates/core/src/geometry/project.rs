//! Pinhole projection of points and cuboids, and calibration perturbation.

use crate::error::{Error, Result};
use crate::fmath;
use crate::rng::{self, Stream};

use super::{cuboid_corners, mat3_mul_mat3, mat3_mul_vec, Box2D, CameraCalib, Cuboid3D};

/// Depth below which a point counts as behind the camera.
pub const MIN_DEPTH: f64 = 1e-6;

/// Projects a world point; returns the pixel and the camera-frame depth.
pub fn project_point(calib: &CameraCalib, p: [f64; 3]) -> Result<([f64; 2], f64)> {
    let pc = {
        let r = mat3_mul_vec(&calib.rotation, p);
        [
            r[0] + calib.translation[0],
            r[1] + calib.translation[1],
            r[2] + calib.translation[2],
        ]
    };
    if pc[2] <= MIN_DEPTH {
        return Err(Error::BehindCamera);
    }
    let u = calib.fx * pc[0] / pc[2] + calib.cx;
    let v = calib.fy * pc[1] / pc[2] + calib.cy;
    Ok(([u, v], pc[2]))
}

/// Inverse of [`project_point`]: the world point on the pixel ray at the
/// given camera-frame depth.
pub fn back_project(calib: &CameraCalib, pixel: [f64; 2], depth: f64) -> [f64; 3] {
    let pc = [
        (pixel[0] - calib.cx) / calib.fx * depth,
        (pixel[1] - calib.cy) / calib.fy * depth,
        depth,
    ];
    let d = [
        pc[0] - calib.translation[0],
        pc[1] - calib.translation[1],
        pc[2] - calib.translation[2],
    ];
    // R^T (pc - t)
    let r = &calib.rotation;
    [
        r[0][0] * d[0] + r[1][0] * d[1] + r[2][0] * d[2],
        r[0][1] * d[0] + r[1][1] * d[1] + r[2][1] * d[2],
        r[0][2] * d[0] + r[1][2] * d[1] + r[2][2] * d[2],
    ]
}

/// Axis-aligned hull of the projected cuboid corners.
///
/// Corners behind the camera are dropped from the hull rather than projected;
/// a cuboid with every corner behind the camera is an error. With `clip` set
/// the hull is intersected with the image rectangle and an empty result is an
/// off-image error. Label and score are copied from the cuboid.
pub fn project_cuboid(calib: &CameraCalib, c: &Cuboid3D, clip: bool) -> Result<Box2D> {
    let mut x_min = f64::INFINITY;
    let mut y_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    let mut visible = 0usize;
    for corner in cuboid_corners(c) {
        match project_point(calib, corner) {
            Ok(([u, v], _)) => {
                visible += 1;
                x_min = x_min.min(u);
                y_min = y_min.min(v);
                x_max = x_max.max(u);
                y_max = y_max.max(v);
            }
            Err(Error::BehindCamera) => continue,
            Err(e) => return Err(e),
        }
    }
    if visible == 0 {
        return Err(Error::BehindCamera);
    }
    if clip {
        x_min = x_min.max(0.0);
        y_min = y_min.max(0.0);
        x_max = x_max.min(calib.image_width);
        y_max = y_max.min(calib.image_height);
    }
    if !(x_min < x_max && y_min < y_max) {
        return Err(Error::OffImage);
    }
    Box2D::new(x_min, y_min, x_max, y_max, c.label, c.score)
}

/// Applies small pitch/roll rotations (each uniform in +-magnitude) to the
/// camera orientation, keeping intrinsics and the camera center fixed.
///
/// Pitch rotates about the camera x axis, roll about the optical axis; both
/// are applied in the camera frame, so the rotation is pre-multiplied and the
/// translation rotated along with it.
pub fn perturb_calib(
    calib: &CameraCalib,
    pitch_noise: f64,
    roll_noise: f64,
    seed: u64,
) -> CameraCalib {
    let mut rng = rng::derive_rng(seed, Stream::CalibNoise, 0);
    let dp = rng::uniform(&mut rng, -pitch_noise, pitch_noise);
    let dr = rng::uniform(&mut rng, -roll_noise, roll_noise);
    let (sp, cp) = (fmath::sin(dp), fmath::cos(dp));
    let (sr, cr) = (fmath::sin(dr), fmath::cos(dr));
    let pitch = [[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]];
    let roll = [[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]];
    let noise = mat3_mul_mat3(&pitch, &roll);
    let rotation = mat3_mul_mat3(&noise, &calib.rotation);
    let translation = mat3_mul_vec(&noise, calib.translation);
    CameraCalib {
        rotation,
        translation,
        ..calib.clone()
    }
}
