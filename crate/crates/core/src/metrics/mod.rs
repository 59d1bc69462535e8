//! Detection evaluation: BEV average precision, average orientation
//! similarity, COCO-style 2D mAP, a composite BEV score, and
//! occlusion/truncation/difficulty breakdowns.
//!
//! Matching is one-pass greedy in descending score order with a one-to-one
//! constraint on counted ground truth; slice-excluded ground truth is
//! "ignored": detections hitting it are dropped from the sweep instead of
//! counting as false positives, and it never contributes to recall
//! denominators. Classes with zero ground truth report their metrics as
//! absent rather than zero, and means run over defined cells only.
//!
//! Determinism: detections are processed in (score desc, frame, index)
//! order; all reductions follow that order, so results are reproducible
//! bit-for-bit.

mod curve;
mod evaluator;
mod matching;

pub use curve::{average_orientation_similarity, average_precision, PrCurve, PrPoint};
pub use evaluator::{
    ap_bev, aos, breakdown, evaluate, map_coco_2d, BevClassEval, BreakdownAxis, CocoMapResult,
    EvalCell, EvalReport, RopeClassScore,
};
pub use evaluator::rope_score;
pub use matching::{match_greedy, GtStatus, MatchFlag};

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One difficulty tier, defined over the projected ground-truth box height
/// and the occlusion/truncation tags (tiers are cumulative: a harder tier
/// admits everything its predicate accepts).
#[derive(Clone, Debug, PartialEq)]
pub struct DifficultyDef {
    pub name: String,
    pub min_height_px: f64,
    pub max_occlusion: f64,
    pub max_truncation: f64,
}

/// Evaluation configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    /// Per-superclass BEV IoU thresholds; classes not listed use
    /// `default_threshold`.
    pub thresholds: Vec<(String, f64)>,
    pub default_threshold: f64,
    /// Recall interpolation points for BEV AP/AOS (the R40 convention).
    pub recall_points_bev: usize,
    /// Recall interpolation points for 2D AP (the 101-point convention).
    pub recall_points_2d: usize,
    /// Detections below this confidence are dropped before evaluation.
    pub score_filter: f64,
    pub difficulties: Vec<DifficultyDef>,
    pub occlusion_ranges: Vec<(f64, f64)>,
    pub truncation_ranges: Vec<(f64, f64)>,
    /// Weight of the AP term in the composite BEV score.
    pub rope_weight: f64,
}

impl EvalConfig {
    /// Benchmark preset: vehicle 0.5, cyclist 0.25, pedestrian 0.25.
    pub fn benchmark() -> Self {
        Self::with_thresholds(&[("vehicle", 0.5), ("cyclist", 0.25), ("pedestrian", 0.25)])
    }

    /// Ablation preset: vehicle 0.7, cyclist 0.5, pedestrian 0.5.
    pub fn ablation() -> Self {
        Self::with_thresholds(&[("vehicle", 0.7), ("cyclist", 0.5), ("pedestrian", 0.5)])
    }

    fn with_thresholds(thresholds: &[(&str, f64)]) -> Self {
        Self {
            thresholds: thresholds
                .iter()
                .map(|(n, t)| (n.to_string(), *t))
                .collect(),
            default_threshold: 0.5,
            recall_points_bev: 40,
            recall_points_2d: 101,
            score_filter: 0.3,
            difficulties: vec![
                DifficultyDef {
                    name: "easy".to_string(),
                    min_height_px: 40.0,
                    max_occlusion: 0.15,
                    max_truncation: 0.15,
                },
                DifficultyDef {
                    name: "mid".to_string(),
                    min_height_px: 25.0,
                    max_occlusion: 0.5,
                    max_truncation: 0.3,
                },
                DifficultyDef {
                    name: "hard".to_string(),
                    min_height_px: 25.0,
                    max_occlusion: 1.0,
                    max_truncation: 0.5,
                },
            ],
            occlusion_ranges: vec![(0.0, 0.5), (0.5, 1.0)],
            truncation_ranges: vec![(0.0, 0.5), (0.5, 1.0)],
            rope_weight: 0.5,
        }
    }

    /// The ten 2D mAP thresholds 0.50, 0.55, ..., 0.95, built from integers
    /// so literal threshold comparisons behave exactly.
    pub fn coco_thresholds() -> Vec<f64> {
        (0..10).map(|k| (50 + 5 * k) as f64 / 100.0).collect()
    }

    pub fn threshold_for(&self, class: &str) -> f64 {
        self.thresholds
            .iter()
            .find(|(n, _)| n == class)
            .map(|(_, t)| *t)
            .unwrap_or(self.default_threshold)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in self
            .thresholds
            .iter()
            .map(|(n, t)| (n.as_str(), *t))
            .chain(core::iter::once(("default", self.default_threshold)))
        {
            if !(t > 0.0 && t <= 1.0) {
                let _ = name;
                return Err(Error::InvalidValue {
                    what: "iou threshold",
                    value: t,
                });
            }
        }
        if self.recall_points_bev < 2 || self.recall_points_2d < 2 {
            return Err(Error::Config {
                message: "recall interpolation needs at least 2 points".to_string(),
            });
        }
        if !(0.0..=1.0).contains(&self.score_filter) {
            return Err(Error::InvalidValue {
                what: "score filter",
                value: self.score_filter,
            });
        }
        if !(0.0..=1.0).contains(&self.rope_weight) {
            return Err(Error::InvalidValue {
                what: "rope weight",
                value: self.rope_weight,
            });
        }
        Ok(())
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self::benchmark()
    }
}
