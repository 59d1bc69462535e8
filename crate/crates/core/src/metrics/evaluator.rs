//! The evaluation engine: per-class sweeps, AP/AOS, 2D mAP, composite
//! score, and sliced breakdowns.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::geometry::{
    angle_diff, iou_aabb, iou_rotated, project_cuboid, Annotation3D, Box2D, CameraCalib, Cuboid3D,
};
use crate::grouping::ClassGrouping;

use super::curve::{average_orientation_similarity, average_precision, PrCurve};
use super::matching::{match_greedy, GtStatus, MatchFlag};
use super::EvalConfig;

/// Orientation similarity of a matched pair.
fn orientation_similarity(det_yaw: f64, gt_yaw: f64) -> f64 {
    0.5 * (1.0 + fmath::cos(angle_diff(det_yaw, gt_yaw)))
}

/// A true-positive pair surviving the sweep, for similarity terms.
#[derive(Clone, Debug)]
struct TpPair {
    frame: usize,
    det: usize,
    gt: usize,
}

struct SweepItem {
    score: f64,
    frame: usize,
    index: usize,
    is_tp: bool,
    similarity: f64,
}

/// Runs the per-frame greedy matching and the global score sweep for one
/// superclass over BEV footprints. `status_of` decides counted/ignored for
/// class members; detections are filtered to the class and the score gate.
fn bev_class_sweep(
    gts: &[Vec<Annotation3D>],
    dets: &[Vec<Cuboid3D>],
    cfg: &EvalConfig,
    grouping: &ClassGrouping,
    head: u32,
    threshold: f64,
    status_of: &mut dyn FnMut(usize, &Annotation3D) -> Result<Option<GtStatus>>,
) -> Result<(PrCurve, usize, Vec<TpPair>)> {
    if gts.len() != dets.len() {
        return Err(Error::ShapeMismatch {
            op: "bev_class_sweep frame counts",
            lhs: alloc::vec![gts.len()],
            rhs: alloc::vec![dets.len()],
        });
    }
    let mut items: Vec<SweepItem> = Vec::new();
    let mut tp_pairs: Vec<TpPair> = Vec::new();
    let mut n_gt = 0usize;
    let mut n_det = 0usize;

    for (frame, (frame_gts, frame_dets)) in gts.iter().zip(dets).enumerate() {
        // Class ground truth with slice statuses.
        let mut class_gts: Vec<(usize, &Annotation3D)> = Vec::new();
        let mut statuses: Vec<GtStatus> = Vec::new();
        for (gi, g) in frame_gts.iter().enumerate() {
            if grouping.route(g.cuboid.label)?.1 != head {
                continue;
            }
            match status_of(frame, g)? {
                Some(status) => {
                    if status == GtStatus::Counted {
                        n_gt += 1;
                    }
                    class_gts.push((gi, g));
                    statuses.push(status);
                }
                None => {}
            }
        }
        // Class detections over the score gate, ranked by score.
        let mut class_dets: Vec<(usize, &Cuboid3D)> = Vec::new();
        for (di, d) in frame_dets.iter().enumerate() {
            if grouping.route(d.label)?.1 != head {
                continue;
            }
            if d.score < cfg.score_filter {
                continue;
            }
            class_dets.push((di, d));
        }
        class_dets.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then(a.0.cmp(&b.0)));
        n_det += class_dets.len();

        let (flags, _) = match_greedy(
            &class_dets,
            &class_gts,
            &statuses,
            |d: &(usize, &Cuboid3D), g: &(usize, &Annotation3D)| {
                iou_rotated(&d.1.bev_footprint(), &g.1.cuboid.bev_footprint())
            },
            threshold,
        );
        for ((di, d), flag) in class_dets.iter().zip(&flags) {
            match flag {
                MatchFlag::Tp { gt, .. } => {
                    let (gi, g) = class_gts[*gt];
                    items.push(SweepItem {
                        score: d.score,
                        frame,
                        index: *di,
                        is_tp: true,
                        similarity: orientation_similarity(d.yaw, g.cuboid.yaw),
                    });
                    tp_pairs.push(TpPair {
                        frame,
                        det: *di,
                        gt: gi,
                    });
                }
                MatchFlag::Fp => items.push(SweepItem {
                    score: d.score,
                    frame,
                    index: *di,
                    is_tp: false,
                    similarity: 0.0,
                }),
                MatchFlag::Ignored => {}
            }
        }
    }

    items.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.frame.cmp(&b.frame))
            .then(a.index.cmp(&b.index))
    });
    let sweep: Vec<(f64, bool, f64)> = items
        .iter()
        .map(|i| (i.score, i.is_tp, i.similarity))
        .collect();
    Ok((PrCurve::from_sweep(&sweep, n_gt), n_det, tp_pairs))
}

/// Same sweep over axis-aligned 2D boxes (no orientation term).
fn box2d_class_sweep(
    gts: &[Vec<Box2D>],
    dets: &[Vec<Box2D>],
    cfg: &EvalConfig,
    grouping: &ClassGrouping,
    head: u32,
    threshold: f64,
) -> Result<(PrCurve, usize)> {
    if gts.len() != dets.len() {
        return Err(Error::ShapeMismatch {
            op: "box2d_class_sweep frame counts",
            lhs: alloc::vec![gts.len()],
            rhs: alloc::vec![dets.len()],
        });
    }
    let mut items: Vec<SweepItem> = Vec::new();
    let mut n_gt = 0usize;
    let mut n_det = 0usize;
    for (frame, (frame_gts, frame_dets)) in gts.iter().zip(dets).enumerate() {
        let mut class_gts: Vec<&Box2D> = Vec::new();
        for g in frame_gts {
            if grouping.route(g.label)?.1 == head {
                class_gts.push(g);
                n_gt += 1;
            }
        }
        let mut class_dets: Vec<(usize, &Box2D)> = Vec::new();
        for (di, d) in frame_dets.iter().enumerate() {
            if grouping.route(d.label)?.1 != head || d.score < cfg.score_filter {
                continue;
            }
            class_dets.push((di, d));
        }
        class_dets.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then(a.0.cmp(&b.0)));
        n_det += class_dets.len();
        let statuses = alloc::vec![GtStatus::Counted; class_gts.len()];
        let (flags, _) = match_greedy(
            &class_dets,
            &class_gts,
            &statuses,
            |d: &(usize, &Box2D), g: &&Box2D| iou_aabb(d.1, g),
            threshold,
        );
        for ((di, d), flag) in class_dets.iter().zip(&flags) {
            match flag {
                MatchFlag::Tp { .. } => items.push(SweepItem {
                    score: d.score,
                    frame,
                    index: *di,
                    is_tp: true,
                    similarity: 1.0,
                }),
                MatchFlag::Fp => items.push(SweepItem {
                    score: d.score,
                    frame,
                    index: *di,
                    is_tp: false,
                    similarity: 0.0,
                }),
                MatchFlag::Ignored => {}
            }
        }
    }
    items.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.frame.cmp(&b.frame))
            .then(a.index.cmp(&b.index))
    });
    let sweep: Vec<(f64, bool, f64)> = items
        .iter()
        .map(|i| (i.score, i.is_tp, i.similarity))
        .collect();
    Ok((PrCurve::from_sweep(&sweep, n_gt), n_det))
}

/// Per-class BEV evaluation result.
#[derive(Clone, Debug, PartialEq)]
pub struct BevClassEval {
    pub class: String,
    pub threshold: f64,
    pub n_gt: usize,
    pub n_det: usize,
    pub tp: usize,
    pub fp: usize,
    pub ap: Option<f64>,
    pub aos: Option<f64>,
    pub curve: PrCurve,
}

/// Unsliced BEV evaluation of every superclass at its configured threshold.
pub fn ap_bev(
    gts: &[Vec<Annotation3D>],
    dets: &[Vec<Cuboid3D>],
    cfg: &EvalConfig,
    grouping: &ClassGrouping,
) -> Result<Vec<BevClassEval>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for (head, sc) in grouping.superclasses().iter().enumerate() {
        let threshold = cfg.threshold_for(&sc.name);
        let (curve, n_det, _) = bev_class_sweep(
            gts,
            dets,
            cfg,
            grouping,
            head as u32,
            threshold,
            &mut |_, _| Ok(Some(GtStatus::Counted)),
        )?;
        out.push(BevClassEval {
            class: sc.name.clone(),
            threshold,
            n_gt: curve.n_gt,
            n_det,
            tp: curve.tp(),
            fp: curve.fp(),
            ap: average_precision(&curve, cfg.recall_points_bev),
            aos: average_orientation_similarity(&curve, cfg.recall_points_bev),
            curve,
        })
    }
    Ok(out)
}

/// Average orientation similarity per class; the same sweep as [`ap_bev`]
/// with true positives weighted by `(1 + cos dyaw)/2`.
pub fn aos(
    gts: &[Vec<Annotation3D>],
    dets: &[Vec<Cuboid3D>],
    cfg: &EvalConfig,
    grouping: &ClassGrouping,
) -> Result<Vec<BevClassEval>> {
    ap_bev(gts, dets, cfg, grouping)
}

/// COCO-style 2D mAP result.
#[derive(Clone, Debug, PartialEq)]
pub struct CocoMapResult {
    /// Per class: mean AP over the ten thresholds (absent without GT).
    pub per_class: Vec<(String, Option<f64>)>,
    /// Mean over classes present in the ground truth.
    pub map: Option<f64>,
}

/// 2D mAP: per-class AP averaged over IoU thresholds 0.50:0.05:0.95 with
/// 101-point interpolation, mean over classes with ground truth.
pub fn map_coco_2d(
    gts: &[Vec<Box2D>],
    dets: &[Vec<Box2D>],
    cfg: &EvalConfig,
    grouping: &ClassGrouping,
) -> Result<CocoMapResult> {
    cfg.validate()?;
    let thresholds = EvalConfig::coco_thresholds();
    let mut per_class = Vec::new();
    for (head, sc) in grouping.superclasses().iter().enumerate() {
        let mut acc = 0.0;
        let mut defined = true;
        for &t in &thresholds {
            let (curve, _) = box2d_class_sweep(gts, dets, cfg, grouping, head as u32, t)?;
            match average_precision(&curve, cfg.recall_points_2d) {
                Some(ap) => acc += ap,
                None => {
                    defined = false;
                    break;
                }
            }
        }
        per_class.push((
            sc.name.clone(),
            defined.then(|| acc / thresholds.len() as f64),
        ));
    }
    let defined: Vec<f64> = per_class.iter().filter_map(|(_, ap)| *ap).collect();
    let map = if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };
    Ok(CocoMapResult { per_class, map })
}

/// Composite BEV score of one class.
#[derive(Clone, Debug, PartialEq)]
pub struct RopeClassScore {
    pub class: String,
    pub threshold: f64,
    pub ap: Option<f64>,
    /// Mean over true positives of the mean of center, orientation and area
    /// similarity; absent without true positives.
    pub similarity: Option<f64>,
    /// `w * ap + (1 - w) * similarity`; absent when either term is.
    pub composite: Option<f64>,
}

/// Composite score `w*AP + (1-w)*mean(center, orientation, area similarity)`
/// over true positives. Center similarity is `exp(-BEV center distance)`,
/// orientation `(1+cos dyaw)/2`, area `min/max` of footprint areas; each
/// lies in [0, 1]. This composite is a stand-in with configurable weight,
/// not a published formula.
pub fn rope_score(
    gts: &[Vec<Annotation3D>],
    dets: &[Vec<Cuboid3D>],
    cfg: &EvalConfig,
    grouping: &ClassGrouping,
) -> Result<Vec<RopeClassScore>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for (head, sc) in grouping.superclasses().iter().enumerate() {
        let threshold = cfg.threshold_for(&sc.name);
        let (curve, _, tp_pairs) = bev_class_sweep(
            gts,
            dets,
            cfg,
            grouping,
            head as u32,
            threshold,
            &mut |_, _| Ok(Some(GtStatus::Counted)),
        )?;
        let ap = average_precision(&curve, cfg.recall_points_bev);
        let similarity = if tp_pairs.is_empty() {
            None
        } else {
            let mut acc = 0.0;
            for pair in &tp_pairs {
                let d = &dets[pair.frame][pair.det];
                let g = &gts[pair.frame][pair.gt].cuboid;
                let dist = fmath::hypot2(d.x - g.x, d.y - g.y);
                let center = fmath::exp(-dist);
                let orient = orientation_similarity(d.yaw, g.yaw);
                let (a1, a2) = (d.w * d.l, g.w * g.l);
                let area = f64::min(a1, a2) / f64::max(a1, a2);
                acc += (center + orient + area) / 3.0;
            }
            Some(acc / tp_pairs.len() as f64)
        };
        let composite = match (ap, similarity) {
            (Some(ap), Some(sim)) => Some(cfg.rope_weight * ap + (1.0 - cfg.rope_weight) * sim),
            _ => None,
        };
        out.push(RopeClassScore {
            class: sc.name.clone(),
            threshold,
            ap,
            similarity,
            composite,
        });
    }
    Ok(out)
}

/// Which ground-truth attribute drives a sliced breakdown.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BreakdownAxis {
    Occlusion,
    Truncation,
    Difficulty,
}

impl BreakdownAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            BreakdownAxis::Occlusion => "occlusion",
            BreakdownAxis::Truncation => "truncation",
            BreakdownAxis::Difficulty => "difficulty",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "occlusion" => Ok(Self::Occlusion),
            "truncation" => Ok(Self::Truncation),
            "difficulty" => Ok(Self::Difficulty),
            other => Err(Error::UnknownName {
                kind: "breakdown axis",
                name: other.to_string(),
            }),
        }
    }
}

/// One (class, slice, threshold) evaluation cell.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalCell {
    pub class: String,
    pub slice: String,
    pub threshold: f64,
    pub n_gt: usize,
    pub n_det: usize,
    pub tp: usize,
    pub fp: usize,
    pub ap: Option<f64>,
    pub aos: Option<f64>,
}

fn in_range(value: f64, lo: f64, hi: f64, last: bool) -> bool {
    if last {
        value >= lo && value <= hi
    } else {
        value >= lo && value < hi
    }
}

/// Sliced evaluation along one axis. Ground truth outside the slice is
/// ignored KITTI-style: it matches neither as true nor as false positive.
/// Ranges are half-open except the final one, which includes its upper
/// bound. Occlusion/truncation slicing requires the tags on every
/// class-relevant ground-truth record.
pub fn breakdown(
    gts: &[Vec<Annotation3D>],
    dets: &[Vec<Cuboid3D>],
    calib: &CameraCalib,
    cfg: &EvalConfig,
    grouping: &ClassGrouping,
    axis: BreakdownAxis,
) -> Result<Vec<EvalCell>> {
    cfg.validate()?;
    let slices: Vec<String> = match axis {
        BreakdownAxis::Occlusion => cfg
            .occlusion_ranges
            .iter()
            .map(|(lo, hi)| alloc::format!("occlusion_{lo:.2}_{hi:.2}"))
            .collect(),
        BreakdownAxis::Truncation => cfg
            .truncation_ranges
            .iter()
            .map(|(lo, hi)| alloc::format!("truncation_{lo:.2}_{hi:.2}"))
            .collect(),
        BreakdownAxis::Difficulty => cfg.difficulties.iter().map(|d| d.name.clone()).collect(),
    };

    let mut out = Vec::new();
    for (si, slice_name) in slices.iter().enumerate() {
        for (head, sc) in grouping.superclasses().iter().enumerate() {
            let threshold = cfg.threshold_for(&sc.name);
            let mut status_of = |_frame: usize, g: &Annotation3D| -> Result<Option<GtStatus>> {
                let selected = match axis {
                    BreakdownAxis::Occlusion => {
                        let occ = g.occlusion.ok_or(Error::MissingField {
                            what: "occlusion tag",
                        })?;
                        let (lo, hi) = cfg.occlusion_ranges[si];
                        in_range(occ, lo, hi, si + 1 == cfg.occlusion_ranges.len())
                    }
                    BreakdownAxis::Truncation => {
                        let tr = g.truncation.ok_or(Error::MissingField {
                            what: "truncation tag",
                        })?;
                        let (lo, hi) = cfg.truncation_ranges[si];
                        in_range(tr, lo, hi, si + 1 == cfg.truncation_ranges.len())
                    }
                    BreakdownAxis::Difficulty => {
                        let def = &cfg.difficulties[si];
                        let occ = g.occlusion.unwrap_or(0.0);
                        let tr = g.truncation.unwrap_or(0.0);
                        let height = match project_cuboid(calib, &g.cuboid, true) {
                            Ok(b) => b.height(),
                            Err(_) => 0.0,
                        };
                        height >= def.min_height_px
                            && occ <= def.max_occlusion
                            && tr <= def.max_truncation
                    }
                };
                Ok(Some(if selected {
                    GtStatus::Counted
                } else {
                    GtStatus::Ignored
                }))
            };
            let (curve, n_det, _) = bev_class_sweep(
                gts,
                dets,
                cfg,
                grouping,
                head as u32,
                threshold,
                &mut status_of,
            )?;
            out.push(EvalCell {
                class: sc.name.clone(),
                slice: slice_name.clone(),
                threshold,
                n_gt: curve.n_gt,
                n_det,
                tp: curve.tp(),
                fp: curve.fp(),
                ap: average_precision(&curve, cfg.recall_points_bev),
                aos: average_orientation_similarity(&curve, cfg.recall_points_bev),
            });
        }
    }
    Ok(out)
}

/// Full evaluation report.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// Unsliced per-class BEV results.
    pub bev: Vec<BevClassEval>,
    /// Difficulty cells (easy/mid/hard).
    pub difficulty: Vec<EvalCell>,
    /// Extra sliced breakdowns, keyed by axis name.
    pub breakdowns: Vec<(String, Vec<EvalCell>)>,
    /// COCO-style 2D mAP when 2D inputs were supplied.
    pub map_2d: Option<CocoMapResult>,
    pub rope: Vec<RopeClassScore>,
}

impl EvalReport {
    /// AOS never exceeds AP in any cell; callers may assert this cheaply.
    pub fn aos_bounded_by_ap(&self) -> bool {
        let pairs = self
            .bev
            .iter()
            .map(|c| (c.ap, c.aos))
            .chain(self.difficulty.iter().map(|c| (c.ap, c.aos)))
            .chain(
                self.breakdowns
                    .iter()
                    .flat_map(|(_, cells)| cells.iter().map(|c| (c.ap, c.aos))),
            );
        for (ap, aos) in pairs {
            if let (Some(ap), Some(aos)) = (ap, aos) {
                if aos > ap {
                    return false;
                }
            }
        }
        true
    }
}

/// Runs the full metric stack: unsliced BEV AP/AOS, difficulty cells, the
/// requested extra breakdowns, 2D mAP (when 2D inputs are given) and the
/// composite score.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    gts: &[Vec<Annotation3D>],
    dets: &[Vec<Cuboid3D>],
    gts2d: Option<&[Vec<Box2D>]>,
    dets2d: Option<&[Vec<Box2D>]>,
    calib: &CameraCalib,
    cfg: &EvalConfig,
    grouping: &ClassGrouping,
    extra_axes: &[BreakdownAxis],
) -> Result<EvalReport> {
    cfg.validate()?;
    let bev = ap_bev(gts, dets, cfg, grouping)?;
    let difficulty = breakdown(gts, dets, calib, cfg, grouping, BreakdownAxis::Difficulty)?;
    let mut breakdowns = Vec::new();
    for &axis in extra_axes {
        if axis == BreakdownAxis::Difficulty {
            continue;
        }
        breakdowns.push((
            axis.as_str().to_string(),
            breakdown(gts, dets, calib, cfg, grouping, axis)?,
        ));
    }
    let map_2d = match (gts2d, dets2d) {
        (Some(g), Some(d)) => Some(map_coco_2d(g, d, cfg, grouping)?),
        _ => None,
    };
    let rope = rope_score(gts, dets, cfg, grouping)?;
    Ok(EvalReport {
        bev,
        difficulty,
        breakdowns,
        map_2d,
        rope,
    })
}
