//! Precision/recall curves and interpolated average precision.

use alloc::vec::Vec;

/// One operating point of the cumulative precision/recall sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct PrPoint {
    pub score: f64,
    /// Cumulative true positives at this score.
    pub tp: usize,
    /// Cumulative false positives at this score.
    pub fp: usize,
    /// Cumulative orientation similarity over the true positives.
    pub similarity: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Raw sweep over detections sorted by descending score, plus the number of
/// counted ground-truth objects.
#[derive(Clone, Debug, PartialEq)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub n_gt: usize,
}

impl PrCurve {
    /// Builds the cumulative curve from `(score, is_tp, similarity)`
    /// triples already sorted by descending score (similarity is 0 for
    /// false positives).
    pub fn from_sweep(sweep: &[(f64, bool, f64)], n_gt: usize) -> Self {
        let mut points = Vec::with_capacity(sweep.len());
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut sim = 0.0f64;
        for &(score, is_tp, s) in sweep {
            if is_tp {
                tp += 1;
                sim += s;
            } else {
                fp += 1;
            }
            let precision = tp as f64 / (tp + fp) as f64;
            let recall = if n_gt == 0 {
                0.0
            } else {
                tp as f64 / n_gt as f64
            };
            points.push(PrPoint {
                score,
                tp,
                fp,
                similarity: sim,
                precision,
                recall,
            });
        }
        Self { points, n_gt }
    }

    pub fn tp(&self) -> usize {
        self.points.last().map_or(0, |p| p.tp)
    }

    pub fn fp(&self) -> usize {
        self.points.last().map_or(0, |p| p.fp)
    }
}

/// Max-interpolated value at each of `n_points` equally spaced recall
/// levels in (0, 1]: the maximum of `value(point)` over operating points
/// with recall at or above the level, 0 when none reaches it.
fn interpolated_mean(
    curve: &PrCurve,
    n_points: usize,
    value: impl Fn(&PrPoint) -> f64,
) -> Option<f64> {
    if curve.n_gt == 0 {
        return None;
    }
    let mut acc = 0.0;
    for k in 1..=n_points {
        let r = k as f64 / n_points as f64;
        let mut best = 0.0f64;
        for p in &curve.points {
            if p.recall >= r {
                best = best.max(value(p));
            }
        }
        acc += best;
    }
    Some(acc / n_points as f64)
}

/// Interpolated average precision; `None` when the class has no counted
/// ground truth (undefined rather than zero).
pub fn average_precision(curve: &PrCurve, n_points: usize) -> Option<f64> {
    interpolated_mean(curve, n_points, |p| p.precision)
}

/// AP-style sweep where each true positive contributes its orientation
/// similarity `(1 + cos dyaw)/2` and each false positive zero; always at or
/// below the average precision of the same curve.
pub fn average_orientation_similarity(curve: &PrCurve, n_points: usize) -> Option<f64> {
    interpolated_mean(curve, n_points, |p| {
        p.similarity / (p.tp + p.fp) as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_tp_covering_all_gts_gives_ap_one() {
        let sweep: Vec<(f64, bool, f64)> = (0..4).map(|i| (1.0 - 0.1 * i as f64, true, 1.0)).collect();
        let curve = PrCurve::from_sweep(&sweep, 4);
        assert_eq!(average_precision(&curve, 40), Some(1.0));
        assert_eq!(average_orientation_similarity(&curve, 40), Some(1.0));
    }

    #[test]
    fn no_tp_gives_ap_zero() {
        let sweep = [(0.9, false, 0.0), (0.8, false, 0.0)];
        let curve = PrCurve::from_sweep(&sweep, 3);
        assert_eq!(average_precision(&curve, 40), Some(0.0));
    }

    #[test]
    fn zero_gt_is_absent_not_zero() {
        let sweep = [(0.9, false, 0.0)];
        let curve = PrCurve::from_sweep(&sweep, 0);
        assert_eq!(average_precision(&curve, 40), None);
    }

    #[test]
    fn hand_enumerated_five_detection_case() {
        // TP, FP, TP, TP, FP over 4 GTs.
        let sweep = [
            (0.9, true, 1.0),
            (0.8, false, 0.0),
            (0.7, true, 1.0),
            (0.6, true, 1.0),
            (0.5, false, 0.0),
        ];
        let curve = PrCurve::from_sweep(&sweep, 4);
        // Operating points: (p, r) = (1, .25), (.5, .25), (2/3, .5), (.75, .75), (.6, .75).
        // Interpolated precision: 1.0 for r <= .25, .75 for .25 < r <= .75, 0 beyond.
        // R40 grid: 10 points at 1.0, 20 points at 0.75, 10 at 0. Mean = 0.625.
        let mut expect = 0.0;
        for k in 1..=40 {
            let r = k as f64 / 40.0;
            expect += if r <= 0.25 {
                1.0
            } else if r <= 0.75 {
                0.75
            } else {
                0.0
            };
        }
        expect /= 40.0;
        assert_eq!(average_precision(&curve, 40), Some(expect));
        assert_eq!(expect, 0.625);
    }

    #[test]
    fn aos_bounded_by_ap() {
        let sweep = [
            (0.9, true, 0.3),
            (0.8, true, 0.9),
            (0.7, false, 0.0),
            (0.6, true, 0.5),
        ];
        let curve = PrCurve::from_sweep(&sweep, 5);
        let ap = average_precision(&curve, 40).unwrap();
        let aos = average_orientation_similarity(&curve, 40).unwrap();
        assert!(aos <= ap);
    }

    #[test]
    fn interpolated_precision_is_non_increasing() {
        let sweep = [
            (0.9, true, 1.0),
            (0.8, false, 0.0),
            (0.7, true, 1.0),
            (0.5, false, 0.0),
            (0.4, true, 1.0),
        ];
        let curve = PrCurve::from_sweep(&sweep, 3);
        let mut last = f64::INFINITY;
        for k in 1..=40 {
            let r = k as f64 / 40.0;
            let mut best = 0.0f64;
            for p in &curve.points {
                if p.recall >= r {
                    best = best.max(p.precision);
                }
            }
            assert!(best <= last);
            last = best;
        }
    }
}
