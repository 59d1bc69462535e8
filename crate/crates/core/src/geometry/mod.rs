//! Camera model, cuboid math, projection and IoU.
//!
//! Conventions, fixed here once for the whole pipeline:
//!
//! * World frame: right-handed, z up, ground plane z = 0.
//! * Yaw: rotation about world z, counterclockwise from +x in bird's-eye
//!   view, normalized into `(-pi, pi]`. A cuboid's length `l` runs along its
//!   heading, width `w` lateral, height `h` vertical.
//! * Camera frame: x right, y down, z forward; `p_cam = R p_world + t`.
//! * Pixels: u right, v down, origin at the top-left image corner.

mod iou;
mod project;

pub use iou::{iou_aabb, iou_rotated, polygon_area, rotated_corners, rotated_intersection_area};
pub use project::{back_project, perturb_calib, project_cuboid, project_point};

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fmath;

/// Normalizes an angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    if !a.is_finite() {
        return a;
    }
    let two_pi = 2.0 * PI;
    let mut r = a - two_pi * fmath::round(a / two_pi);
    if r <= -PI {
        r += two_pi;
    } else if r > PI {
        r -= two_pi;
    }
    r
}

/// Signed difference `a - b` normalized into `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b)
}

/// Absolute angular error modulo pi (heading-agnostic, for 180-degree
/// symmetric footprints). Result lies in `[0, pi/2]`.
pub fn yaw_error_mod_pi(a: f64, b: f64) -> f64 {
    let d = fmath::abs(angle_diff(a, b));
    f64::min(d, fmath::abs(d - PI))
}

/// One 3D detection or annotation: center, dimensions, heading, class, score.
#[derive(Clone, Debug, PartialEq)]
pub struct Cuboid3D {
    /// Object center in the world frame, meters.
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Lateral extent, meters.
    pub w: f64,
    /// Vertical extent, meters.
    pub h: f64,
    /// Extent along the heading, meters.
    pub l: f64,
    /// Heading on the BEV plane, `(-pi, pi]`.
    pub yaw: f64,
    /// Fine-class index into the active vocabulary.
    pub label: u32,
    /// Detection confidence in `[0, 1]`; 1 for ground truth.
    pub score: f64,
}

impl Cuboid3D {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x: f64,
        y: f64,
        z: f64,
        w: f64,
        h: f64,
        l: f64,
        yaw: f64,
        label: u32,
        score: f64,
    ) -> Result<Self> {
        for (what, v) in [("cuboid w", w), ("cuboid h", h), ("cuboid l", l)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidValue { what, value: v });
            }
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidValue {
                what: "cuboid score",
                value: score,
            });
        }
        if !yaw.is_finite() {
            return Err(Error::NonFinite { what: "cuboid yaw" });
        }
        Ok(Self {
            x,
            y,
            z,
            w,
            h,
            l,
            yaw: normalize_angle(yaw),
            label,
            score,
        })
    }

    /// Same cuboid rotated to the given yaw.
    pub fn with_yaw(&self, yaw: f64) -> Self {
        let mut c = self.clone();
        c.yaw = normalize_angle(yaw);
        c
    }

    /// BEV footprint rectangle.
    pub fn bev_footprint(&self) -> RotatedBoxBEV {
        RotatedBoxBEV {
            cx: self.x,
            cy: self.y,
            w: self.w,
            l: self.l,
            yaw: self.yaw,
        }
    }
}

/// The eight world-frame corners of a cuboid.
///
/// Order: bottom face counterclockwise in BEV starting from the
/// `(+l/2, +w/2)` corner, then the top face in the same order.
pub fn cuboid_corners(c: &Cuboid3D) -> [[f64; 3]; 8] {
    let (s, co) = (fmath::sin(c.yaw), fmath::cos(c.yaw));
    let offsets = [
        (0.5 * c.l, 0.5 * c.w),
        (-0.5 * c.l, 0.5 * c.w),
        (-0.5 * c.l, -0.5 * c.w),
        (0.5 * c.l, -0.5 * c.w),
    ];
    let mut out = [[0.0; 3]; 8];
    for (i, &(dl, dw)) in offsets.iter().enumerate() {
        let dx = co * dl - s * dw;
        let dy = s * dl + co * dw;
        out[i] = [c.x + dx, c.y + dy, c.z - 0.5 * c.h];
        out[i + 4] = [c.x + dx, c.y + dy, c.z + 0.5 * c.h];
    }
    out
}

/// Pinhole intrinsics plus world-to-camera extrinsics and image size.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraCalib {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// World-to-camera rotation, row-major.
    pub rotation: [[f64; 3]; 3],
    /// World-to-camera translation, meters.
    pub translation: [f64; 3],
    pub image_width: f64,
    pub image_height: f64,
}

impl CameraCalib {
    pub const ORTHONORMAL_TOL: f64 = 1e-9;

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        rotation: [[f64; 3]; 3],
        translation: [f64; 3],
        image_width: f64,
        image_height: f64,
    ) -> Result<Self> {
        if !(fx > 0.0) || !(fy > 0.0) {
            return Err(Error::InvalidValue {
                what: "focal length",
                value: if fx > 0.0 { fy } else { fx },
            });
        }
        if !(image_width > 0.0) || !(image_height > 0.0) {
            return Err(Error::InvalidValue {
                what: "image size",
                value: f64::min(image_width, image_height),
            });
        }
        if !(0.0 < cx && cx < image_width) {
            return Err(Error::InvalidValue {
                what: "principal point cx",
                value: cx,
            });
        }
        if !(0.0 < cy && cy < image_height) {
            return Err(Error::InvalidValue {
                what: "principal point cy",
                value: cy,
            });
        }
        let calib = Self {
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
            image_width,
            image_height,
        };
        calib.check_rotation()?;
        Ok(calib)
    }

    fn check_rotation(&self) -> Result<()> {
        let r = &self.rotation;
        // R R^T = I
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[i][k] * r[j][k]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if fmath::abs(dot - expect) > Self::ORTHONORMAL_TOL {
                    return Err(Error::InvalidValue {
                        what: "rotation orthonormality",
                        value: dot,
                    });
                }
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        if fmath::abs(det - 1.0) > Self::ORTHONORMAL_TOL {
            return Err(Error::InvalidValue {
                what: "rotation determinant",
                value: det,
            });
        }
        Ok(())
    }

    /// Camera center in world coordinates: `-R^T t`.
    pub fn camera_center(&self) -> [f64; 3] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            -(r[0][0] * t[0] + r[1][0] * t[1] + r[2][0] * t[2]),
            -(r[0][1] * t[0] + r[1][1] * t[1] + r[2][1] * t[2]),
            -(r[0][2] * t[0] + r[1][2] * t[1] + r[2][2] * t[2]),
        ]
    }

    /// Builds a roadside camera at `position`, heading `yaw` (world, ccw from
    /// +x) with a downward `pitch`, looking with world z up.
    pub fn roadside(
        position: [f64; 3],
        yaw: f64,
        pitch_down: f64,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        image_width: f64,
        image_height: f64,
    ) -> Result<Self> {
        let (sy, cyaw) = (fmath::sin(yaw), fmath::cos(yaw));
        let (sp, cp) = (fmath::sin(pitch_down), fmath::cos(pitch_down));
        let forward = [cp * cyaw, cp * sy, -sp];
        // right = forward x up, down = forward x right
        let right = [sy, -cyaw, 0.0];
        let down = [
            forward[1] * right[2] - forward[2] * right[1],
            forward[2] * right[0] - forward[0] * right[2],
            forward[0] * right[1] - forward[1] * right[0],
        ];
        let rotation = [right, down, forward];
        let mut translation = [0.0; 3];
        for (i, row) in rotation.iter().enumerate() {
            translation[i] = -(row[0] * position[0] + row[1] * position[1] + row[2] * position[2]);
        }
        Self::new(
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
            image_width,
            image_height,
        )
    }
}

/// Axis-aligned 2D box in pixels with class and score.
#[derive(Clone, Debug, PartialEq)]
pub struct Box2D {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub label: u32,
    pub score: f64,
}

impl Box2D {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64, label: u32, score: f64) -> Result<Self> {
        if !(x_min < x_max) {
            return Err(Error::InvalidValue {
                what: "box x extent",
                value: x_max - x_min,
            });
        }
        if !(y_min < y_max) {
            return Err(Error::InvalidValue {
                what: "box y extent",
                value: y_max - y_min,
            });
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidValue {
                what: "box score",
                value: score,
            });
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
            label,
            score,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        ]
    }

    /// Intersection with the image rectangle; `None` when empty.
    pub fn clipped(&self, image_width: f64, image_height: f64) -> Option<Self> {
        let x_min = self.x_min.max(0.0);
        let y_min = self.y_min.max(0.0);
        let x_max = self.x_max.min(image_width);
        let y_max = self.y_max.min(image_height);
        if x_min < x_max && y_min < y_max {
            Some(Self {
                x_min,
                y_min,
                x_max,
                y_max,
                label: self.label,
                score: self.score,
            })
        } else {
            None
        }
    }
}

/// Rotated rectangle on the BEV plane (meters).
#[derive(Clone, Debug, PartialEq)]
pub struct RotatedBoxBEV {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub l: f64,
    pub yaw: f64,
}

impl RotatedBoxBEV {
    pub fn new(cx: f64, cy: f64, w: f64, l: f64, yaw: f64) -> Result<Self> {
        for (what, v) in [("bev box w", w), ("bev box l", l)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidValue { what, value: v });
            }
        }
        Ok(Self {
            cx,
            cy,
            w,
            l,
            yaw: normalize_angle(yaw),
        })
    }

    pub fn area(&self) -> f64 {
        self.w * self.l
    }
}

/// Ground-truth cuboid together with its evaluation tags.
#[derive(Clone, Debug, PartialEq)]
pub struct Annotation3D {
    pub cuboid: Cuboid3D,
    /// Fraction of the projected box hidden by nearer objects, `[0, 1]`.
    pub occlusion: Option<f64>,
    /// Fraction of the projected box cut off by the image border, `[0, 1]`.
    pub truncation: Option<f64>,
}

impl Annotation3D {
    pub fn untagged(cuboid: Cuboid3D) -> Self {
        Self {
            cuboid,
            occlusion: None,
            truncation: None,
        }
    }
}

/// Column-major-free 3x3 * 3 vector helper used across the module.
pub(crate) fn mat3_mul_vec(r: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
        r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
        r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
    ]
}

pub(crate) fn mat3_mul_mat3(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Distances between all pairs of the given points (test oracle helper).
pub fn pairwise_distances(points: &[[f64; 3]]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d: f64 = (0..3)
                .map(|k| (points[i][k] - points[j][k]) * (points[i][k] - points[j][k]))
                .sum();
            out.push(fmath::sqrt(d));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cuboid_corners_at_origin() {
        let c = Cuboid3D::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0, 1.0).unwrap();
        let corners = cuboid_corners(&c);
        for corner in corners {
            for v in corner {
                assert!((v.abs() - 0.5).abs() < 1e-15);
            }
        }
        // First bottom corner is (+0.5, +0.5, -0.5).
        assert_eq!(corners[0], [0.5, 0.5, -0.5]);
    }

    #[test]
    fn quarter_turn_swaps_footprint_extents() {
        let c = Cuboid3D::new(1.0, 2.0, 0.5, 1.0, 1.0, 2.0, core::f64::consts::FRAC_PI_2, 0, 1.0)
            .unwrap();
        let corners = cuboid_corners(&c);
        // At yaw pi/2 the l-extent lies along y and the w-extent along -x.
        let xs: Vec<f64> = corners.iter().map(|p| p[0] - 1.0).collect();
        let ys: Vec<f64> = corners.iter().map(|p| p[1] - 2.0).collect();
        assert!(xs.iter().all(|v| v.abs() - 0.5 < 1e-12));
        assert!(ys.iter().all(|v| v.abs() - 1.0 < 1e-12));
        let x_extent = xs.iter().cloned().fold(f64::MIN, f64::max)
            - xs.iter().cloned().fold(f64::MAX, f64::min);
        let y_extent = ys.iter().cloned().fold(f64::MIN, f64::max)
            - ys.iter().cloned().fold(f64::MAX, f64::min);
        assert!((x_extent - 1.0).abs() < 1e-12);
        assert!((y_extent - 2.0).abs() < 1e-12);
    }

    #[test]
    fn corner_distances_match_analytic_edges() {
        let c = Cuboid3D::new(3.0, -2.0, 1.0, 1.5, 2.0, 4.0, 0.7, 2, 0.9).unwrap();
        let corners = cuboid_corners(&c);
        let dists = pairwise_distances(&corners);
        // Every pairwise distance must be one of the 7 analytic lengths
        // (3 edges, 3 face diagonals, 1 space diagonal).
        let (w, h, l) = (c.w, c.h, c.l);
        let expected = [
            w,
            h,
            l,
            fmath::sqrt(w * w + h * h),
            fmath::sqrt(w * w + l * l),
            fmath::sqrt(h * h + l * l),
            fmath::sqrt(w * w + h * h + l * l),
        ];
        for d in dists {
            assert!(
                expected.iter().any(|e| (d - e).abs() < 1e-9),
                "unexpected distance {d}"
            );
        }
    }

    #[test]
    fn yaw_is_normalized() {
        let c = Cuboid3D::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 3.0 * PI, 0, 1.0).unwrap();
        assert!((c.yaw - PI).abs() < 1e-12);
        let c2 = Cuboid3D::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, -PI, 0, 1.0).unwrap();
        assert!((c2.yaw - PI).abs() < 1e-12);
    }

    #[test]
    fn invalid_dimensions_are_rejected() {
        assert!(Cuboid3D::new(0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0, 1.0).is_err());
        assert!(Box2D::new(0.0, 0.0, 0.0, 1.0, 0, 1.0).is_err());
        assert!(RotatedBoxBEV::new(0.0, 0.0, -1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn roadside_camera_satisfies_invariants() {
        let calib = CameraCalib::roadside(
            [0.0, 0.0, 6.0],
            0.1,
            0.25,
            1200.0,
            1200.0,
            768.0,
            432.0,
            1536.0,
            864.0,
        )
        .unwrap();
        // Camera center recovered.
        let c = calib.camera_center();
        assert!((c[0]).abs() < 1e-9 && (c[1]).abs() < 1e-9 && (c[2] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn angle_helpers() {
        assert!((normalize_angle(2.5 * PI) - 0.5 * PI).abs() < 1e-12);
        assert!((angle_diff(0.1, -0.1) - 0.2).abs() < 1e-12);
        assert!(yaw_error_mod_pi(0.2, 0.2 + PI) < 1e-12);
        assert!((yaw_error_mod_pi(0.0, 0.4) - 0.4).abs() < 1e-12);
    }
}
