//! Greedy one-to-one matching of score-ranked detections to ground truth.

use alloc::vec;
use alloc::vec::Vec;

/// Slice status of one ground-truth object.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GtStatus {
    /// Participates in matching and in the recall denominator.
    Counted,
    /// Absorbs detections without making them true or false positives and
    /// never counts toward recall (out-of-slice ground truth).
    Ignored,
}

/// Outcome of one detection under greedy matching.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatchFlag {
    Tp { gt: usize, iou: f64 },
    Fp,
    Ignored,
}

/// Matches detections (already sorted by descending score) against ground
/// truth: each detection takes the highest-IoU still-unmatched counted GT
/// with IoU >= threshold, else falls back to any ignored GT at or above the
/// threshold (becoming ignored itself), else is a false positive. Counted
/// GTs match at most once; ignored GTs may absorb any number of detections.
///
/// Ties on IoU resolve to the lowest ground-truth index. Returns the
/// per-detection flags and the per-GT matched flags.
pub fn match_greedy<D, G>(
    dets_sorted: &[D],
    gts: &[G],
    statuses: &[GtStatus],
    iou_fn: impl Fn(&D, &G) -> f64,
    threshold: f64,
) -> (Vec<MatchFlag>, Vec<bool>) {
    debug_assert_eq!(gts.len(), statuses.len());
    let mut gt_matched = vec![false; gts.len()];
    let mut flags = Vec::with_capacity(dets_sorted.len());
    for det in dets_sorted {
        let mut best_counted: Option<(usize, f64)> = None;
        let mut best_ignored: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            let iou = iou_fn(det, gt);
            if iou < threshold {
                continue;
            }
            match statuses[gi] {
                GtStatus::Counted => {
                    if !gt_matched[gi] && best_counted.map_or(true, |(_, b)| iou > b) {
                        best_counted = Some((gi, iou));
                    }
                }
                GtStatus::Ignored => {
                    if best_ignored.map_or(true, |(_, b)| iou > b) {
                        best_ignored = Some((gi, iou));
                    }
                }
            }
        }
        if let Some((gi, iou)) = best_counted {
            gt_matched[gi] = true;
            flags.push(MatchFlag::Tp { gt: gi, iou });
        } else if best_ignored.is_some() {
            flags.push(MatchFlag::Ignored);
        } else {
            flags.push(MatchFlag::Fp);
        }
    }
    (flags, gt_matched)
}
