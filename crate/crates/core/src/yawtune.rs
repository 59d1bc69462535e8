//! Post-hoc yaw refinement: rotate each 3D detection about its yaw axis to
//! maximize the IoU between its projected 2D box and the matched 2D
//! detection.
//!
//! The objective is multi-modal in yaw (footprints are symmetric under a
//! half turn, near-square ones under a quarter turn), so the search is a
//! coarse grid over the configured range followed by golden-section
//! refinement inside the best grid cell. The original yaw is always a
//! candidate, which makes non-degradation exact. Ties are broken toward the
//! candidate nearest the original yaw.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::geometry::{
    angle_diff, iou_aabb, normalize_angle, project_cuboid, Box2D, CameraCalib, Cuboid3D,
};
use crate::grouping::ClassGrouping;

/// IoU differences below this count as a tie.
const TIE_EPS: f64 = 1e-9;

/// Golden ratio conjugate.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Debug, PartialEq)]
pub struct YawTuneConfig {
    /// Half-width of the yaw search interval around the initial yaw.
    pub search_half_range: f64,
    /// Coarse grid step.
    pub coarse_step: f64,
    /// Golden-section refinement iterations inside the best grid cell.
    pub refine_iterations: usize,
    /// Minimum projected IoU for pairing a 3D detection with a 2D box.
    pub min_match_iou: f64,
    /// When set, only detections routed to this superclass are tuned
    /// (matched pairs of other classes pass through unchanged).
    pub superclass_filter: Option<String>,
}

impl Default for YawTuneConfig {
    fn default() -> Self {
        Self {
            search_half_range: core::f64::consts::FRAC_PI_2,
            coarse_step: core::f64::consts::PI / 180.0,
            refine_iterations: 20,
            min_match_iou: 0.3,
            superclass_filter: Some(String::from("vehicle")),
        }
    }
}

impl YawTuneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.search_half_range > 0.0 && self.search_half_range <= core::f64::consts::PI) {
            return Err(Error::InvalidValue {
                what: "yaw search half range",
                value: self.search_half_range,
            });
        }
        if !(self.coarse_step > 0.0) {
            return Err(Error::InvalidValue {
                what: "yaw coarse step",
                value: self.coarse_step,
            });
        }
        if !(0.0..=1.0).contains(&self.min_match_iou) {
            return Err(Error::InvalidValue {
                what: "min match iou",
                value: self.min_match_iou,
            });
        }
        Ok(())
    }
}

/// Greedy one-to-one matching of 3D detections to 2D boxes by descending
/// projected IoU, restricted to pairs routed to the same superclass. Returns
/// per-cuboid `(box index, iou)`; cuboids without a qualifying pair (or that
/// do not project into the image) stay unmatched.
pub fn match_3d_to_2d(
    cuboids: &[Cuboid3D],
    boxes: &[Box2D],
    calib: &CameraCalib,
    grouping: &ClassGrouping,
    min_match_iou: f64,
) -> Result<Vec<Option<(usize, f64)>>> {
    let mut projections: Vec<Option<Box2D>> = Vec::with_capacity(cuboids.len());
    for c in cuboids {
        match project_cuboid(calib, c, true) {
            Ok(b) => projections.push(Some(b)),
            Err(Error::BehindCamera) | Err(Error::OffImage) => projections.push(None),
            Err(e) => return Err(e),
        }
    }

    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (ci, proj) in projections.iter().enumerate() {
        let Some(proj) = proj else { continue };
        let (_, c_head) = grouping.route(cuboids[ci].label)?;
        for (bi, b) in boxes.iter().enumerate() {
            let (_, b_head) = grouping.route(b.label)?;
            if c_head != b_head {
                continue;
            }
            let iou = iou_aabb(proj, b);
            if iou >= min_match_iou && iou > 0.0 {
                candidates.push((iou, ci, bi));
            }
        }
    }
    // Descending IoU; ties resolved by cuboid then box index for determinism.
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut cuboid_used = alloc::vec![false; cuboids.len()];
    let mut box_used = alloc::vec![false; boxes.len()];
    let mut out: Vec<Option<(usize, f64)>> = alloc::vec![None; cuboids.len()];
    for (iou, ci, bi) in candidates {
        if cuboid_used[ci] || box_used[bi] {
            continue;
        }
        cuboid_used[ci] = true;
        box_used[bi] = true;
        out[ci] = Some((bi, iou));
    }
    Ok(out)
}

/// Projected-box IoU objective at a candidate yaw. Off-image projections
/// score zero; fully behind-camera propagates as an error.
fn objective(c: &Cuboid3D, yaw: f64, target: &Box2D, calib: &CameraCalib) -> Result<f64> {
    match project_cuboid(calib, &c.with_yaw(yaw), true) {
        Ok(proj) => Ok(iou_aabb(&proj, target)),
        Err(Error::OffImage) => Ok(0.0),
        Err(e) => Err(e),
    }
}

struct Best {
    yaw: f64,
    iou: f64,
    yaw0: f64,
}

impl Best {
    fn offer(&mut self, yaw: f64, iou: f64) {
        if iou > self.iou + TIE_EPS {
            self.yaw = yaw;
            self.iou = iou;
        } else if iou > self.iou - TIE_EPS {
            // Tie: prefer the candidate nearest the original yaw.
            let cur = fmath::abs(angle_diff(self.yaw, self.yaw0));
            let new = fmath::abs(angle_diff(yaw, self.yaw0));
            if new < cur {
                self.yaw = yaw;
                self.iou = f64::max(self.iou, iou);
            }
        }
    }
}

/// Maximizes the projected-box IoU over yaw. Returns `(yaw*, iou*)` with
/// `iou* >= f(original yaw)` always; when no candidate overlaps the box at
/// all, the original yaw is returned with an IoU of zero.
///
/// `iou*` is the best objective value seen; candidates tying within 1e-9
/// resolve to the angle nearest the original yaw (this handles the theta
/// vs theta+pi footprint symmetry and the quarter-turn symmetry of square
/// footprints).
pub fn tune_yaw(
    c: &Cuboid3D,
    target: &Box2D,
    calib: &CameraCalib,
    cfg: &YawTuneConfig,
) -> Result<(f64, f64)> {
    cfg.validate()?;
    let yaw0 = c.yaw;
    let mut best = Best {
        yaw: yaw0,
        iou: objective(c, yaw0, target, calib)?,
        yaw0,
    };

    let steps = fmath::ceil(cfg.search_half_range / cfg.coarse_step) as i64;
    let mut grid_best = (yaw0, best.iou);
    for k in -steps..=steps {
        if k == 0 {
            continue;
        }
        let theta = yaw0 + (k as f64) * cfg.coarse_step;
        let theta = yaw0 + (theta - yaw0).clamp(-cfg.search_half_range, cfg.search_half_range);
        let f = objective(c, theta, target, calib)?;
        best.offer(theta, f);
        if f > grid_best.1 {
            grid_best = (theta, f);
        }
    }

    if best.iou == 0.0 {
        // No candidate overlaps the box at any yaw.
        return Ok((yaw0, 0.0));
    }

    // Golden-section refinement inside the best grid cell, clamped to the
    // configured search interval.
    let mut lo = f64::max(grid_best.0 - cfg.coarse_step, yaw0 - cfg.search_half_range);
    let mut hi = f64::min(grid_best.0 + cfg.coarse_step, yaw0 + cfg.search_half_range);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = objective(c, x1, target, calib)?;
    let mut f2 = objective(c, x2, target, calib)?;
    best.offer(x1, f1);
    best.offer(x2, f2);
    for _ in 0..cfg.refine_iterations {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = objective(c, x2, target, calib)?;
            best.offer(x2, f2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = objective(c, x1, target, calib)?;
            best.offer(x1, f1);
        }
    }

    Ok((normalize_angle(best.yaw), best.iou))
}

/// One tuned pair in a frame report.
#[derive(Clone, Debug, PartialEq)]
pub struct TunedPair {
    pub cuboid_index: usize,
    pub box_index: usize,
    pub yaw_before: f64,
    pub yaw_after: f64,
    pub iou_before: f64,
    pub iou_after: f64,
}

/// Matches and tunes one frame. Unmatched detections and classes outside the
/// configured superclass filter pass through untouched. Every tuned pair's
/// projected IoU is >= its pre-tuning value.
pub fn tune_frame(
    cuboids: &[Cuboid3D],
    boxes: &[Box2D],
    calib: &CameraCalib,
    grouping: &ClassGrouping,
    cfg: &YawTuneConfig,
) -> Result<(Vec<Cuboid3D>, Vec<TunedPair>)> {
    cfg.validate()?;
    let matches = match_3d_to_2d(cuboids, boxes, calib, grouping, cfg.min_match_iou)?;
    let mut refined = cuboids.to_vec();
    let mut report = Vec::new();
    for (ci, m) in matches.iter().enumerate() {
        let Some((bi, iou_before)) = *m else { continue };
        if let Some(filter) = &cfg.superclass_filter {
            if grouping.superclass_name(cuboids[ci].label)? != filter {
                continue;
            }
        }
        let (yaw_after, iou_after) = tune_yaw(&cuboids[ci], &boxes[bi], calib, cfg)?;
        refined[ci] = cuboids[ci].with_yaw(yaw_after);
        report.push(TunedPair {
            cuboid_index: ci,
            box_index: bi,
            yaw_before: cuboids[ci].yaw,
            yaw_after,
            iou_before,
            iou_after,
        });
    }
    Ok((refined, report))
}
