//! Deterministic synthetic roadside scenes, simulated noisy 2D/3D detectors
//! and a toy image-feature renderer.
//!
//! Scenes stand in for a real roadside dataset: an elevated, pitched-down
//! camera fixed for the whole scene, objects placed on lanes with
//! lane-aligned headings, and occlusion/truncation tags derived from
//! projected-box overlap and image-border clipping. Every output is a pure
//! function of `(config, seed, frame index)`; random streams are split per
//! purpose so changing one noise dial never perturbs the others.

mod detectors;
mod features;
mod scene;

pub use detectors::{simulate_2d_detector, simulate_3d_detector, Detection2D};
pub use features::render_toy_features;
pub use scene::{annotate_occlusion_truncation, gen_scene, scene_calib};

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grouping::Vocabulary;

/// Mean (w, h, l) in meters per fine class, aligned with
/// [`Vocabulary::roadside`] order.
pub const DEFAULT_SIZE_MEANS: [[f64; 3]; 9] = [
    [2.5, 3.2, 8.5],  // truck
    [2.6, 3.1, 11.0], // bus
    [1.85, 1.6, 4.4], // car
    [1.95, 2.0, 5.0], // van
    [0.6, 1.7, 1.8],  // bicyclist
    [1.1, 1.6, 2.6],  // tricyclist
    [0.7, 1.5, 2.0],  // motorcyclist
    [0.8, 1.4, 1.8],  // barrowlist
    [0.6, 1.7, 0.6],  // pedestrian
];

/// Relative class frequencies (car-heavy roadside traffic).
pub const DEFAULT_CLASS_WEIGHTS: [f64; 9] = [0.08, 0.05, 0.42, 0.10, 0.09, 0.04, 0.08, 0.04, 0.10];

/// Scene generator configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneConfig {
    pub seed: u64,
    pub n_frames: usize,
    pub objects_min: usize,
    pub objects_max: usize,
    pub image_width: f64,
    pub image_height: f64,
    pub focal: f64,
    /// Camera height range in meters (roadside: elevated).
    pub camera_height: (f64, f64),
    /// Downward pitch range in radians.
    pub camera_pitch: (f64, f64),
    /// Lane center offsets in meters (world y).
    pub lane_offsets: Vec<f64>,
    /// Longitudinal placement range in meters (world x, away from camera).
    pub x_range: (f64, f64),
    pub lateral_jitter: f64,
    pub yaw_jitter: f64,
    /// Probability of a lane-opposing heading.
    pub heading_flip_prob: f64,
    pub class_weights: [f64; 9],
    pub size_means: [[f64; 3]; 9],
    /// Per-dimension size sigma as a fraction of the class mean.
    pub size_sigma_frac: f64,
    /// Placement attempts per object before giving up.
    pub max_attempts: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_frames: 100,
            objects_min: 3,
            objects_max: 8,
            image_width: 1536.0,
            image_height: 864.0,
            focal: 1150.0,
            camera_height: (5.5, 7.5),
            camera_pitch: (0.20, 0.30),
            lane_offsets: alloc::vec![-5.25, -1.75, 1.75, 5.25],
            x_range: (12.0, 52.0),
            lateral_jitter: 0.4,
            yaw_jitter: 0.08,
            heading_flip_prob: 0.5,
            class_weights: DEFAULT_CLASS_WEIGHTS,
            size_means: DEFAULT_SIZE_MEANS,
            size_sigma_frac: 0.08,
            max_attempts: 1000,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.objects_min == 0 || self.objects_min > self.objects_max {
            return Err(Error::Config {
                message: "objects range must satisfy 1 <= min <= max".to_string(),
            });
        }
        if self.lane_offsets.is_empty() {
            return Err(Error::Config {
                message: "at least one lane offset required".to_string(),
            });
        }
        if !(self.camera_height.0 > 0.0 && self.camera_height.0 <= self.camera_height.1) {
            return Err(Error::Config {
                message: "camera height range must be positive and ordered".to_string(),
            });
        }
        if !(self.camera_pitch.0 >= 0.0 && self.camera_pitch.0 <= self.camera_pitch.1) {
            return Err(Error::Config {
                message: "camera pitch range must be non-negative and ordered".to_string(),
            });
        }
        if !(self.x_range.0 > 0.0 && self.x_range.0 < self.x_range.1) {
            return Err(Error::Config {
                message: "x range must be positive and ordered".to_string(),
            });
        }
        if !(self.focal > 0.0) {
            return Err(Error::InvalidValue {
                what: "focal length",
                value: self.focal,
            });
        }
        if self.class_weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config {
                message: "class weights must sum to a positive value".to_string(),
            });
        }
        if self.max_attempts == 0 {
            return Err(Error::Config {
                message: "max_attempts must be positive".to_string(),
            });
        }
        let vocab = Vocabulary::roadside();
        debug_assert_eq!(vocab.len(), self.class_weights.len());
        Ok(())
    }
}

/// 2D detector noise dials.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorNoise2D {
    /// Center jitter sigma in pixels.
    pub center_sigma_px: f64,
    /// Width/height jitter sigma in pixels.
    pub size_sigma_px: f64,
    /// Per-object miss probability.
    pub fn_rate: f64,
    /// Per-object spurious-detection probability.
    pub fp_rate: f64,
    /// Probability of reporting a wrong class label.
    pub label_confusion: f64,
}

impl DetectorNoise2D {
    pub fn zero() -> Self {
        Self {
            center_sigma_px: 0.0,
            size_sigma_px: 0.0,
            fn_rate: 0.0,
            fp_rate: 0.0,
            label_confusion: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("2d center sigma", self.center_sigma_px),
            ("2d size sigma", self.size_sigma_px),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidValue { what, value: v });
            }
        }
        for (what, v) in [
            ("fn rate", self.fn_rate),
            ("fp rate", self.fp_rate),
            ("label confusion", self.label_confusion),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidValue { what, value: v });
            }
        }
        Ok(())
    }
}

/// 3D detector noise dials.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorNoise3D {
    /// BEV position sigma in meters.
    pub pos_sigma: f64,
    /// Yaw sigma in radians.
    pub yaw_sigma: f64,
    /// Per-dimension multiplicative size sigma.
    pub size_sigma: f64,
    /// Systematic shift along the camera-to-object ground ray, meters.
    pub depth_bias: f64,
}

impl DetectorNoise3D {
    pub fn zero() -> Self {
        Self {
            pos_sigma: 0.0,
            yaw_sigma: 0.0,
            size_sigma: 0.0,
            depth_bias: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("3d position sigma", self.pos_sigma),
            ("3d yaw sigma", self.yaw_sigma),
            ("3d size sigma", self.size_sigma),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidValue { what, value: v });
            }
        }
        if !self.depth_bias.is_finite() {
            return Err(Error::NonFinite {
                what: "3d depth bias",
            });
        }
        Ok(())
    }
}

/// Area of the union of axis-aligned rectangles, clipped to a window,
/// by coordinate compression. Rectangles are `(x0, y0, x1, y1)`.
pub(crate) fn rect_union_area(
    rects: &[(f64, f64, f64, f64)],
    window: (f64, f64, f64, f64),
) -> f64 {
    let mut clipped: Vec<(f64, f64, f64, f64)> = Vec::new();
    for &(x0, y0, x1, y1) in rects {
        let cx0 = x0.max(window.0);
        let cy0 = y0.max(window.1);
        let cx1 = x1.min(window.2);
        let cy1 = y1.min(window.3);
        if cx0 < cx1 && cy0 < cy1 {
            clipped.push((cx0, cy0, cx1, cy1));
        }
    }
    if clipped.is_empty() {
        return 0.0;
    }
    let mut xs: Vec<f64> = clipped.iter().flat_map(|r| [r.0, r.2]).collect();
    let mut ys: Vec<f64> = clipped.iter().flat_map(|r| [r.1, r.3]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let mut area = 0.0;
    for xi in 0..xs.len() - 1 {
        for yi in 0..ys.len() - 1 {
            let cx = 0.5 * (xs[xi] + xs[xi + 1]);
            let cy = 0.5 * (ys[yi] + ys[yi + 1]);
            if clipped
                .iter()
                .any(|r| r.0 <= cx && cx <= r.2 && r.1 <= cy && cy <= r.3)
            {
                area += (xs[xi + 1] - xs[xi]) * (ys[yi + 1] - ys[yi]);
            }
        }
    }
    area
}
