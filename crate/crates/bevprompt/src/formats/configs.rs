//! Config file DTOs. Every field is optional; missing fields resolve to the
//! library defaults, and the fully resolved form is what lands in the run
//! manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use bevprompt_core::fusion::Step4Query;
use bevprompt_core::metrics::{BreakdownAxis, DifficultyDef, EvalConfig};
use bevprompt_core::prompt::{LabelScale, PromptKind};
use bevprompt_core::synth::{DetectorNoise2D, DetectorNoise3D, SceneConfig};
use bevprompt_core::toytrain::{LrSchedule, ModelConfig, PromptBatching, PromptSource, TrainConfig};
use bevprompt_core::yawtune::YawTuneConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::errors::CliError;

pub fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => {
            let raw = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&raw).with_context(|| format!("parsing config {}", p.display()))
        }
        None => Ok(T::default()),
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SceneConfigJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_frames: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objects_min: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objects_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_height: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub focal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub camera_height: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub camera_pitch: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lane_offsets: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lateral_jitter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub yaw_jitter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heading_flip_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_weights: Option<[f64; 9]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size_sigma_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_attempts: Option<usize>,
}

impl SceneConfigJson {
    pub fn resolve(&self) -> SceneConfig {
        let d = SceneConfig::default();
        SceneConfig {
            seed: self.seed.unwrap_or(d.seed),
            n_frames: self.n_frames.unwrap_or(d.n_frames),
            objects_min: self.objects_min.unwrap_or(d.objects_min),
            objects_max: self.objects_max.unwrap_or(d.objects_max),
            image_width: self.image_width.unwrap_or(d.image_width),
            image_height: self.image_height.unwrap_or(d.image_height),
            focal: self.focal.unwrap_or(d.focal),
            camera_height: self
                .camera_height
                .map(|r| (r[0], r[1]))
                .unwrap_or(d.camera_height),
            camera_pitch: self
                .camera_pitch
                .map(|r| (r[0], r[1]))
                .unwrap_or(d.camera_pitch),
            lane_offsets: self.lane_offsets.clone().unwrap_or(d.lane_offsets),
            x_range: self.x_range.map(|r| (r[0], r[1])).unwrap_or(d.x_range),
            lateral_jitter: self.lateral_jitter.unwrap_or(d.lateral_jitter),
            yaw_jitter: self.yaw_jitter.unwrap_or(d.yaw_jitter),
            heading_flip_prob: self.heading_flip_prob.unwrap_or(d.heading_flip_prob),
            class_weights: self.class_weights.unwrap_or(d.class_weights),
            size_means: d.size_means,
            size_sigma_frac: self.size_sigma_frac.unwrap_or(d.size_sigma_frac),
            max_attempts: self.max_attempts.unwrap_or(d.max_attempts),
        }
    }

    pub fn resolved(cfg: &SceneConfig) -> Self {
        Self {
            seed: Some(cfg.seed),
            n_frames: Some(cfg.n_frames),
            objects_min: Some(cfg.objects_min),
            objects_max: Some(cfg.objects_max),
            image_width: Some(cfg.image_width),
            image_height: Some(cfg.image_height),
            focal: Some(cfg.focal),
            camera_height: Some([cfg.camera_height.0, cfg.camera_height.1]),
            camera_pitch: Some([cfg.camera_pitch.0, cfg.camera_pitch.1]),
            lane_offsets: Some(cfg.lane_offsets.clone()),
            x_range: Some([cfg.x_range.0, cfg.x_range.1]),
            lateral_jitter: Some(cfg.lateral_jitter),
            yaw_jitter: Some(cfg.yaw_jitter),
            heading_flip_prob: Some(cfg.heading_flip_prob),
            class_weights: Some(cfg.class_weights),
            size_sigma_frac: Some(cfg.size_sigma_frac),
            max_attempts: Some(cfg.max_attempts),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig2DJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_sigma_px: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size_sigma_px: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fn_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fp_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_confusion: Option<f64>,
}

impl NoiseConfig2DJson {
    pub fn resolve(&self) -> DetectorNoise2D {
        let z = DetectorNoise2D::zero();
        DetectorNoise2D {
            center_sigma_px: self.center_sigma_px.unwrap_or(z.center_sigma_px),
            size_sigma_px: self.size_sigma_px.unwrap_or(z.size_sigma_px),
            fn_rate: self.fn_rate.unwrap_or(z.fn_rate),
            fp_rate: self.fp_rate.unwrap_or(z.fp_rate),
            label_confusion: self.label_confusion.unwrap_or(z.label_confusion),
        }
    }

    pub fn resolved(n: &DetectorNoise2D) -> Self {
        Self {
            center_sigma_px: Some(n.center_sigma_px),
            size_sigma_px: Some(n.size_sigma_px),
            fn_rate: Some(n.fn_rate),
            fp_rate: Some(n.fp_rate),
            label_confusion: Some(n.label_confusion),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig3DJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pos_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub yaw_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth_bias: Option<f64>,
}

impl NoiseConfig3DJson {
    pub fn resolve(&self) -> DetectorNoise3D {
        let z = DetectorNoise3D::zero();
        DetectorNoise3D {
            pos_sigma: self.pos_sigma.unwrap_or(z.pos_sigma),
            yaw_sigma: self.yaw_sigma.unwrap_or(z.yaw_sigma),
            size_sigma: self.size_sigma.unwrap_or(z.size_sigma),
            depth_bias: self.depth_bias.unwrap_or(z.depth_bias),
        }
    }

    pub fn resolved(n: &DetectorNoise3D) -> Self {
        Self {
            pos_sigma: Some(n.pos_sigma),
            yaw_sigma: Some(n.yaw_sigma),
            size_sigma: Some(n.size_sigma),
            depth_bias: Some(n.depth_bias),
        }
    }
}

/// Config of `synth-gen`: the scene plus the two detector noise dials.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SynthConfigJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneConfigJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise2d: Option<NoiseConfig2DJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise3d: Option<NoiseConfig3DJson>,
}

impl SynthConfigJson {
    pub fn resolve(&self) -> (SceneConfig, DetectorNoise2D, DetectorNoise3D) {
        (
            self.scene.clone().unwrap_or_default().resolve(),
            self.noise2d.clone().unwrap_or_default().resolve(),
            self.noise3d.clone().unwrap_or_default().resolve(),
        )
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfigJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_model: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mlp_hidden: Option<usize>,
    #[serde(rename = "residuals", skip_serializing_if = "Option::is_none")]
    pub residual: Option<bool>,
    #[serde(rename = "step4_query_mode", skip_serializing_if = "Option::is_none")]
    pub step4_query: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt_kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_scale: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learnable_b: Option<bool>,
    /// "stacked" (prompts attend to each other) or "per_detection".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batching: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub head_hidden: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_h: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_w: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channels: Option<usize>,
}

pub fn parse_prompt_kind(s: &str) -> Result<PromptKind> {
    match s {
        "box_with_label" => Ok(PromptKind::BoxWithLabel),
        "box" => Ok(PromptKind::BoxOnly),
        "center_with_label" => Ok(PromptKind::CenterWithLabel),
        "center" => Ok(PromptKind::CenterOnly),
        other => Err(CliError::schema(format!("unknown prompt kind {other:?}")).into()),
    }
}

pub fn prompt_kind_name(k: PromptKind) -> &'static str {
    match k {
        PromptKind::BoxWithLabel => "box_with_label",
        PromptKind::BoxOnly => "box",
        PromptKind::CenterWithLabel => "center_with_label",
        PromptKind::CenterOnly => "center",
    }
}

pub fn parse_label_scale(s: &str) -> Result<LabelScale> {
    match s {
        "normalized" => Ok(LabelScale::Normalized),
        "raw_id" => Ok(LabelScale::RawId),
        other => Err(CliError::schema(format!("unknown label scale {other:?}")).into()),
    }
}

pub fn label_scale_name(s: LabelScale) -> &'static str {
    match s {
        LabelScale::Normalized => "normalized",
        LabelScale::RawId => "raw_id",
    }
}

impl ModelConfigJson {
    pub fn resolve(&self) -> Result<ModelConfig> {
        let d = ModelConfig::default();
        Ok(ModelConfig {
            d_model: self.d_model.unwrap_or(d.d_model),
            heads: self.heads.unwrap_or(d.heads),
            mlp_hidden: self.mlp_hidden.unwrap_or(d.mlp_hidden),
            residual: self.residual.unwrap_or(d.residual),
            step4_query: match &self.step4_query {
                Some(s) => Step4Query::parse(s).map_err(crate::errors::from_core)?,
                None => d.step4_query,
            },
            prompt_kind: match &self.prompt_kind {
                Some(s) => parse_prompt_kind(s)?,
                None => d.prompt_kind,
            },
            label_scale: match &self.label_scale {
                Some(s) => parse_label_scale(s)?,
                None => d.label_scale,
            },
            learnable_b: self.learnable_b.unwrap_or(d.learnable_b),
            batching: match &self.batching {
                Some(s) => PromptBatching::parse(s).map_err(crate::errors::from_core)?,
                None => d.batching,
            },
            head_hidden: self.head_hidden.unwrap_or(d.head_hidden),
            grid_h: self.grid_h.unwrap_or(d.grid_h),
            grid_w: self.grid_w.unwrap_or(d.grid_w),
            channels: self.channels.unwrap_or(d.channels),
        })
    }

    pub fn resolved(cfg: &ModelConfig) -> Self {
        Self {
            d_model: Some(cfg.d_model),
            heads: Some(cfg.heads),
            mlp_hidden: Some(cfg.mlp_hidden),
            residual: Some(cfg.residual),
            step4_query: Some(cfg.step4_query.as_str().to_string()),
            prompt_kind: Some(prompt_kind_name(cfg.prompt_kind).to_string()),
            label_scale: Some(label_scale_name(cfg.label_scale).to_string()),
            learnable_b: Some(cfg.learnable_b),
            batching: Some(cfg.batching.as_str().to_string()),
            head_hidden: Some(cfg.head_hidden),
            grid_h: Some(cfg.grid_h),
            grid_w: Some(cfg.grid_w),
            channels: Some(cfg.channels),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrainConfigJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt_source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score_filter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfigJson>,
}

impl TrainConfigJson {
    pub fn resolve(&self) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        Ok(TrainConfig {
            lr: self.lr.unwrap_or(d.lr),
            weight_decay: self.weight_decay.unwrap_or(d.weight_decay),
            beta1: self.beta1.unwrap_or(d.beta1),
            beta2: self.beta2.unwrap_or(d.beta2),
            eps: self.eps.unwrap_or(d.eps),
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            seed: self.seed.unwrap_or(d.seed),
            prompt_source: match &self.prompt_source {
                Some(s) => PromptSource::parse(s).map_err(crate::errors::from_core)?,
                None => d.prompt_source,
            },
            score_filter: self.score_filter.unwrap_or(d.score_filter),
            val_fraction: self.val_fraction.unwrap_or(d.val_fraction),
            schedule: match self.schedule.as_deref() {
                Some("constant") => LrSchedule::Constant,
                Some("cosine") => LrSchedule::Cosine,
                Some(other) => {
                    return Err(CliError::schema(format!("unknown schedule {other:?}")).into())
                }
                None => d.schedule,
            },
            model: self.model.clone().unwrap_or_default().resolve()?,
        })
    }

    pub fn resolved(cfg: &TrainConfig) -> Self {
        Self {
            lr: Some(cfg.lr),
            weight_decay: Some(cfg.weight_decay),
            beta1: Some(cfg.beta1),
            beta2: Some(cfg.beta2),
            eps: Some(cfg.eps),
            epochs: Some(cfg.epochs),
            batch_size: Some(cfg.batch_size),
            seed: Some(cfg.seed),
            prompt_source: Some(cfg.prompt_source.as_str().to_string()),
            score_filter: Some(cfg.score_filter),
            val_fraction: Some(cfg.val_fraction),
            schedule: Some(
                match cfg.schedule {
                    LrSchedule::Constant => "constant",
                    LrSchedule::Cosine => "cosine",
                }
                .to_string(),
            ),
            model: Some(ModelConfigJson::resolved(&cfg.model)),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DifficultyJson {
    pub name: String,
    pub min_height_px: f64,
    pub max_occlusion: f64,
    pub max_truncation: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvalConfigJson {
    /// "benchmark" (0.5/0.25/0.25) or "ablation" (0.7/0.5/0.5).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall_points_bev: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall_points_2d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score_filter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rope_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occlusion_ranges: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_ranges: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub difficulties: Option<Vec<DifficultyJson>>,
    /// Built-in grouping strategy name ("functionality" by default).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grouping: Option<String>,
    /// Extra breakdown axes to evaluate: "occlusion", "truncation".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakdowns: Option<Vec<String>>,
}

impl EvalConfigJson {
    pub fn resolve(&self) -> Result<(EvalConfig, String, Vec<BreakdownAxis>)> {
        let mut cfg = match self.preset.as_deref() {
            None | Some("benchmark") => EvalConfig::benchmark(),
            Some("ablation") => EvalConfig::ablation(),
            Some(other) => {
                return Err(CliError::schema(format!("unknown eval preset {other:?}")).into())
            }
        };
        if let Some(t) = &self.thresholds {
            cfg.thresholds = t.iter().map(|(k, v)| (k.clone(), *v)).collect();
        }
        if let Some(v) = self.default_threshold {
            cfg.default_threshold = v;
        }
        if let Some(v) = self.recall_points_bev {
            cfg.recall_points_bev = v;
        }
        if let Some(v) = self.recall_points_2d {
            cfg.recall_points_2d = v;
        }
        if let Some(v) = self.score_filter {
            cfg.score_filter = v;
        }
        if let Some(v) = self.rope_weight {
            cfg.rope_weight = v;
        }
        if let Some(v) = &self.occlusion_ranges {
            cfg.occlusion_ranges = v.iter().map(|r| (r[0], r[1])).collect();
        }
        if let Some(v) = &self.truncation_ranges {
            cfg.truncation_ranges = v.iter().map(|r| (r[0], r[1])).collect();
        }
        if let Some(v) = &self.difficulties {
            cfg.difficulties = v
                .iter()
                .map(|d| DifficultyDef {
                    name: d.name.clone(),
                    min_height_px: d.min_height_px,
                    max_occlusion: d.max_occlusion,
                    max_truncation: d.max_truncation,
                })
                .collect();
        }
        let grouping = self
            .grouping
            .clone()
            .unwrap_or_else(|| "functionality".to_string());
        let axes = match &self.breakdowns {
            Some(names) => names
                .iter()
                .map(|n| BreakdownAxis::parse(n).map_err(crate::errors::from_core))
                .collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        Ok((cfg, grouping, axes))
    }

    pub fn resolved(cfg: &EvalConfig, grouping: &str, axes: &[BreakdownAxis]) -> Self {
        Self {
            preset: None,
            thresholds: Some(cfg.thresholds.iter().cloned().collect()),
            default_threshold: Some(cfg.default_threshold),
            recall_points_bev: Some(cfg.recall_points_bev),
            recall_points_2d: Some(cfg.recall_points_2d),
            score_filter: Some(cfg.score_filter),
            rope_weight: Some(cfg.rope_weight),
            occlusion_ranges: Some(cfg.occlusion_ranges.iter().map(|&(a, b)| [a, b]).collect()),
            truncation_ranges: Some(
                cfg.truncation_ranges.iter().map(|&(a, b)| [a, b]).collect(),
            ),
            difficulties: Some(
                cfg.difficulties
                    .iter()
                    .map(|d| DifficultyJson {
                        name: d.name.clone(),
                        min_height_px: d.min_height_px,
                        max_occlusion: d.max_occlusion,
                        max_truncation: d.max_truncation,
                    })
                    .collect(),
            ),
            grouping: Some(grouping.to_string()),
            breakdowns: Some(axes.iter().map(|a| a.as_str().to_string()).collect()),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct YawTuneConfigJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_half_range: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coarse_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_match_iou: Option<f64>,
    /// Superclass to tune ("vehicle" by default); "all" tunes every class.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub superclass_filter: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grouping: Option<String>,
}

impl YawTuneConfigJson {
    pub fn resolve(&self) -> (YawTuneConfig, String) {
        let d = YawTuneConfig::default();
        let filter = match self.superclass_filter.as_deref() {
            Some("all") => None,
            Some(name) => Some(name.to_string()),
            None => d.superclass_filter.clone(),
        };
        (
            YawTuneConfig {
                search_half_range: self.search_half_range.unwrap_or(d.search_half_range),
                coarse_step: self.coarse_step.unwrap_or(d.coarse_step),
                refine_iterations: self.refine_iterations.unwrap_or(d.refine_iterations),
                min_match_iou: self.min_match_iou.unwrap_or(d.min_match_iou),
                superclass_filter: filter,
            },
            self.grouping
                .clone()
                .unwrap_or_else(|| "functionality".to_string()),
        )
    }

    pub fn resolved(cfg: &YawTuneConfig, grouping: &str) -> Self {
        Self {
            search_half_range: Some(cfg.search_half_range),
            coarse_step: Some(cfg.coarse_step),
            refine_iterations: Some(cfg.refine_iterations),
            min_match_iou: Some(cfg.min_match_iou),
            superclass_filter: Some(
                cfg.superclass_filter
                    .clone()
                    .unwrap_or_else(|| "all".to_string()),
            ),
            grouping: Some(grouping.to_string()),
        }
    }
}

/// Config of `sweep`: scene + train + the 2D-detector noise ladder.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfigJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneConfigJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfigJson>,
    pub noise_levels: Vec<NoiseConfig2DJson>,
}

/// The standard benchmark bundle used by `bench prompts` and the acceptance
/// runs: scene, detector noise, training config, and the seeds to repeat.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BenchConfigJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneConfigJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise2d: Option<NoiseConfig2DJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise3d: Option<NoiseConfig3DJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfigJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
}
