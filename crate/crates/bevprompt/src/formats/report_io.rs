//! Report documents: evaluation, training, sweep and yaw-tuning outputs,
//! plus PR-curve CSV export.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use bevprompt_core::metrics::{BevClassEval, CocoMapResult, EvalCell, EvalReport, RopeClassScore};
use bevprompt_core::toytrain::{SweepReport, TrainReport};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Serializes the evaluation report (schema v1).
pub fn eval_report_json(report: &EvalReport) -> Value {
    let class_eval = |c: &BevClassEval| {
        json!({
            "class": c.class,
            "threshold": c.threshold,
            "n_gt": c.n_gt,
            "n_det": c.n_det,
            "tp": c.tp,
            "fp": c.fp,
            "ap": c.ap,
            "aos": c.aos,
        })
    };
    let cell = |c: &EvalCell| {
        json!({
            "class": c.class,
            "slice": c.slice,
            "threshold": c.threshold,
            "n_gt": c.n_gt,
            "n_det": c.n_det,
            "tp": c.tp,
            "fp": c.fp,
            "ap": c.ap,
            "aos": c.aos,
        })
    };
    let coco = |m: &CocoMapResult| {
        json!({
            "per_class": m.per_class.iter().map(|(name, ap)| json!({"class": name, "ap": ap})).collect::<Vec<_>>(),
            "map": m.map,
        })
    };
    let rope = |r: &RopeClassScore| {
        json!({
            "class": r.class,
            "threshold": r.threshold,
            "ap": r.ap,
            "similarity": r.similarity,
            "composite": r.composite,
        })
    };
    json!({
        "schema_version": 1,
        "bev": report.bev.iter().map(class_eval).collect::<Vec<_>>(),
        "difficulty": report.difficulty.iter().map(cell).collect::<Vec<_>>(),
        "breakdowns": report
            .breakdowns
            .iter()
            .map(|(axis, cells)| json!({"axis": axis, "cells": cells.iter().map(cell).collect::<Vec<_>>()}))
            .collect::<Vec<_>>(),
        "map_2d": report.map_2d.as_ref().map(coco),
        "rope": report.rope.iter().map(rope).collect::<Vec<_>>(),
    })
}

/// Serializes a training report (schema v1).
pub fn train_report_json(report: &TrainReport) -> Value {
    let val = |v: &bevprompt_core::toytrain::ValMetrics| {
        json!({
            "depth_mae_m": v.depth_mae,
            "yaw_mae_rad": v.yaw_mae,
            "size_mae_m": v.size_mae,
            "examples": v.examples,
        })
    };
    json!({
        "schema_version": 1,
        "epochs": report
            .epochs
            .iter()
            .map(|e| json!({"epoch": e.epoch, "train_loss": e.train_loss}))
            .collect::<Vec<_>>(),
        "batch_losses": report.batch_losses,
        "val_prompted": val(&report.val_prompted),
        "val_baseline": val(&report.val_baseline),
    })
}

/// Serializes a sweep report (schema v1).
pub fn sweep_report_json(report: &SweepReport) -> Value {
    json!({
        "schema_version": 1,
        "points": report
            .points
            .iter()
            .map(|p| {
                json!({
                    "noise": {
                        "center_sigma_px": p.noise.center_sigma_px,
                        "size_sigma_px": p.noise.size_sigma_px,
                        "fn_rate": p.noise.fn_rate,
                        "fp_rate": p.noise.fp_rate,
                        "label_confusion": p.noise.label_confusion,
                    },
                    "map_2d": p.map_2d,
                    "depth_mae_m": p.depth_mae,
                    "yaw_mae_rad": p.yaw_mae,
                })
            })
            .collect::<Vec<_>>(),
        "spearman_map_vs_neg_depth_error": report.spearman,
    })
}

/// One tuned pair in the yaw-tuning report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TunePairJson {
    pub frame: u64,
    pub cuboid_index: usize,
    pub box_index: usize,
    pub yaw_before: f64,
    pub yaw_after: f64,
    pub iou_before: f64,
    pub iou_after: f64,
}

/// Serializes the yaw-tuning per-pair report (schema v1).
pub fn tune_report_json(pairs: &[TunePairJson]) -> Value {
    json!({
        "schema_version": 1,
        "pairs": pairs,
    })
}

/// Exports per-class PR curves as CSV files `pr_<class>.csv` with columns
/// score, tp, fp, precision, recall.
pub fn write_pr_csv(dir: &Path, report: &EvalReport) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for c in &report.bev {
        let mut csv = String::from("score,tp,fp,precision,recall\n");
        for p in &c.curve.points {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                p.score, p.tp, p.fp, p.precision, p.recall
            ));
        }
        let path = dir.join(format!("pr_{}.csv", c.class));
        fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
