//! Independent brute-force evaluator, written directly from the metric
//! definitions. It shares only the geometric primitives (IoU, projection)
//! with the implementation under test; matching, sweeps, interpolation and
//! slicing are re-derived here from scratch.

use bevprompt_core::geometry::{
    angle_diff, iou_aabb, iou_rotated, project_cuboid, Annotation3D, Box2D, CameraCalib, Cuboid3D,
};
use bevprompt_core::grouping::ClassGrouping;
use bevprompt_core::metrics::EvalConfig;

#[derive(Clone, Copy, PartialEq)]
enum Slice {
    All,
    Occlusion(usize),
    Truncation(usize),
    Difficulty(usize),
}

/// Per-detection sweep entry.
struct Entry {
    score: f64,
    frame: usize,
    index: usize,
    tp: bool,
    similarity: f64,
}

fn gt_in_slice(
    gt: &Annotation3D,
    slice: Slice,
    cfg: &EvalConfig,
    calib: &CameraCalib,
) -> Option<bool> {
    match slice {
        Slice::All => Some(true),
        Slice::Occlusion(i) => {
            let occ = gt.occlusion?;
            let (lo, hi) = cfg.occlusion_ranges[i];
            let last = i + 1 == cfg.occlusion_ranges.len();
            Some(if last {
                occ >= lo && occ <= hi
            } else {
                occ >= lo && occ < hi
            })
        }
        Slice::Truncation(i) => {
            let tr = gt.truncation?;
            let (lo, hi) = cfg.truncation_ranges[i];
            let last = i + 1 == cfg.truncation_ranges.len();
            Some(if last {
                tr >= lo && tr <= hi
            } else {
                tr >= lo && tr < hi
            })
        }
        Slice::Difficulty(i) => {
            let def = &cfg.difficulties[i];
            let occ = gt.occlusion.unwrap_or(0.0);
            let tr = gt.truncation.unwrap_or(0.0);
            let height = match project_cuboid(calib, &gt.cuboid, true) {
                Ok(b) => b.y_max - b.y_min,
                Err(_) => 0.0,
            };
            Some(
                height >= def.min_height_px
                    && occ <= def.max_occlusion
                    && tr <= def.max_truncation,
            )
        }
    }
}

/// One class sweep over BEV footprints: returns (n_gt, sorted sweep).
fn bev_sweep(
    gts: &[Vec<Annotation3D>],
    dets: &[Vec<Cuboid3D>],
    cfg: &EvalConfig,
    grouping: &ClassGrouping,
    head: u32,
    threshold: f64,
    slice: Slice,
    calib: &CameraCalib,
) -> (usize, Vec<Entry>) {
    let mut n_gt = 0usize;
    let mut entries: Vec<Entry> = Vec::new();
    for frame in 0..gts.len() {
        // Class ground truth with counted/ignored status.
        let mut class_gts: Vec<(&Annotation3D, bool)> = Vec::new();
        for g in &gts[frame] {
            if grouping.route(g.cuboid.label).unwrap().1 != head {
                continue;
            }
            let counted = gt_in_slice(g, slice, cfg, calib).expect("tags present");
            if counted {
                n_gt += 1;
            }
            class_gts.push((g, counted));
        }
        // Class detections over the score gate, ranked (score desc, index).
        let mut class_dets: Vec<(usize, &Cuboid3D)> = dets[frame]
            .iter()
            .enumerate()
            .filter(|(_, d)| {
                grouping.route(d.label).unwrap().1 == head && d.score >= cfg.score_filter
            })
            .collect();
        class_dets.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then(a.0.cmp(&b.0)));

        let mut taken = vec![false; class_gts.len()];
        for (di, d) in &class_dets {
            let mut best_counted: Option<(usize, f64)> = None;
            let mut any_ignored = false;
            for (gi, (g, counted)) in class_gts.iter().enumerate() {
                let iou = iou_rotated(&d.bev_footprint(), &g.cuboid.bev_footprint());
                if iou < threshold {
                    continue;
                }
                if *counted {
                    if !taken[gi] && best_counted.map_or(true, |(_, b)| iou > b) {
                        best_counted = Some((gi, iou));
                    }
                } else {
                    any_ignored = true;
                }
            }
            if let Some((gi, _)) = best_counted {
                taken[gi] = true;
                let sim = 0.5 * (1.0 + angle_diff(d.yaw, class_gts[gi].0.cuboid.yaw).cos());
                entries.push(Entry {
                    score: d.score,
                    frame,
                    index: *di,
                    tp: true,
                    similarity: sim,
                });
            } else if !any_ignored {
                entries.push(Entry {
                    score: d.score,
                    frame,
                    index: *di,
                    tp: false,
                    similarity: 0.0,
                });
            }
        }
    }
    entries.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.frame.cmp(&b.frame))
            .then(a.index.cmp(&b.index))
    });
    (n_gt, entries)
}

/// Interpolated AP over the sweep; `None` when the class has no counted GT.
fn ap_from_sweep(n_gt: usize, entries: &[Entry], n_points: usize, orientation: bool) -> Option<f64> {
    if n_gt == 0 {
        return None;
    }
    // Cumulative operating points.
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(entries.len()); // (recall, value)
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut sim = 0.0;
    for e in entries {
        if e.tp {
            tp += 1;
            sim += e.similarity;
        } else {
            fp += 1;
        }
        let recall = tp as f64 / n_gt as f64;
        let value = if orientation {
            sim / (tp + fp) as f64
        } else {
            tp as f64 / (tp + fp) as f64
        };
        points.push((recall, value));
    }
    let mut acc = 0.0;
    for k in 1..=n_points {
        let r = k as f64 / n_points as f64;
        let mut best = 0.0f64;
        for &(recall, value) in &points {
            if recall >= r {
                best = best.max(value);
            }
        }
        acc += best;
    }
    Some(acc / n_points as f64)
}

/// Brute-force BEV AP and AOS per superclass (unsliced).
pub fn oracle_ap_aos(
    gts: &[Vec<Annotation3D>],
    dets: &[Vec<Cuboid3D>],
    cfg: &EvalConfig,
    grouping: &ClassGrouping,
    calib: &CameraCalib,
) -> Vec<(String, Option<f64>, Option<f64>)> {
    grouping
        .superclasses()
        .iter()
        .enumerate()
        .map(|(head, sc)| {
            let t = cfg.threshold_for(&sc.name);
            let (n_gt, entries) =
                bev_sweep(gts, dets, cfg, grouping, head as u32, t, Slice::All, calib);
            (
                sc.name.clone(),
                ap_from_sweep(n_gt, &entries, cfg.recall_points_bev, false),
                ap_from_sweep(n_gt, &entries, cfg.recall_points_bev, true),
            )
        })
        .collect()
}

/// Brute-force sliced cells for one axis, ordered (slice, class) like the
/// implementation.
pub fn oracle_breakdown(
    gts: &[Vec<Annotation3D>],
    dets: &[Vec<Cuboid3D>],
    cfg: &EvalConfig,
    grouping: &ClassGrouping,
    calib: &CameraCalib,
    axis: &str,
) -> Vec<(String, Option<f64>, Option<f64>, usize)> {
    let slices: Vec<Slice> = match axis {
        "occlusion" => (0..cfg.occlusion_ranges.len()).map(Slice::Occlusion).collect(),
        "truncation" => (0..cfg.truncation_ranges.len()).map(Slice::Truncation).collect(),
        "difficulty" => (0..cfg.difficulties.len()).map(Slice::Difficulty).collect(),
        _ => panic!("unknown axis"),
    };
    let mut out = Vec::new();
    for slice in slices {
        for (head, sc) in grouping.superclasses().iter().enumerate() {
            let t = cfg.threshold_for(&sc.name);
            let (n_gt, entries) =
                bev_sweep(gts, dets, cfg, grouping, head as u32, t, slice, calib);
            out.push((
                sc.name.clone(),
                ap_from_sweep(n_gt, &entries, cfg.recall_points_bev, false),
                ap_from_sweep(n_gt, &entries, cfg.recall_points_bev, true),
                n_gt,
            ));
        }
    }
    out
}

/// Brute-force COCO mAP over 2D boxes.
pub fn oracle_map_2d(
    gts: &[Vec<Box2D>],
    dets: &[Vec<Box2D>],
    cfg: &EvalConfig,
    grouping: &ClassGrouping,
) -> Option<f64> {
    let thresholds: Vec<f64> = (0..10).map(|k| (50 + 5 * k) as f64 / 100.0).collect();
    let mut class_aps: Vec<f64> = Vec::new();
    for (head, _) in grouping.superclasses().iter().enumerate() {
        let mut acc = 0.0;
        let mut defined = true;
        for &t in &thresholds {
            // Per-frame greedy matching at threshold t.
            let mut n_gt = 0usize;
            let mut entries: Vec<Entry> = Vec::new();
            for frame in 0..gts.len() {
                let class_gts: Vec<&Box2D> = gts[frame]
                    .iter()
                    .filter(|g| grouping.route(g.label).unwrap().1 == head as u32)
                    .collect();
                n_gt += class_gts.len();
                let mut class_dets: Vec<(usize, &Box2D)> = dets[frame]
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| {
                        grouping.route(d.label).unwrap().1 == head as u32
                            && d.score >= cfg.score_filter
                    })
                    .collect();
                class_dets.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then(a.0.cmp(&b.0)));
                let mut taken = vec![false; class_gts.len()];
                for (di, d) in &class_dets {
                    let mut best: Option<(usize, f64)> = None;
                    for (gi, g) in class_gts.iter().enumerate() {
                        if taken[gi] {
                            continue;
                        }
                        let iou = iou_aabb(d, g);
                        if iou >= t && best.map_or(true, |(_, b)| iou > b) {
                            best = Some((gi, iou));
                        }
                    }
                    if let Some((gi, _)) = best {
                        taken[gi] = true;
                        entries.push(Entry {
                            score: d.score,
                            frame,
                            index: *di,
                            tp: true,
                            similarity: 1.0,
                        });
                    } else {
                        entries.push(Entry {
                            score: d.score,
                            frame,
                            index: *di,
                            tp: false,
                            similarity: 0.0,
                        });
                    }
                }
            }
            entries.sort_by(|a, b| {
                b.score
                    .total_cmp(&a.score)
                    .then(a.frame.cmp(&b.frame))
                    .then(a.index.cmp(&b.index))
            });
            match ap_from_sweep(n_gt, &entries, cfg.recall_points_2d, false) {
                Some(ap) => acc += ap,
                None => {
                    defined = false;
                    break;
                }
            }
        }
        if defined {
            class_aps.push(acc / thresholds.len() as f64);
        }
    }
    if class_aps.is_empty() {
        None
    } else {
        Some(class_aps.iter().sum::<f64>() / class_aps.len() as f64)
    }
}
