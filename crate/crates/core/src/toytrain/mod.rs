//! Deterministic toy training of the prompted 3D-regression model on
//! synthetic scenes, with an unprompted baseline trained under the identical
//! budget for comparison.
//!
//! The model regresses, per 2D detection prompt, the camera-frame depth,
//! heading (as sin/cos) and metric size of the source object from the toy
//! image features fused with the prompt tokens. Validation prompts always
//! come from the simulated 2D detector regardless of the training prompt
//! source.

mod adamw;
mod dataset;
mod model;
mod sweep;
mod train;

pub use adamw::{adamw_step, AdamWConfig, AdamWState};
pub use dataset::{assemble_dataset, build_dataset, SynthDataset, TrainExample, TrainFrame, TARGET_MATCH_IOU};
pub use model::{
    decode_regression, prompted_frame_predictions, BaselineModel, Regression, ToyModel,
    ToyModelVars, REGRESSION_DIM,
};
pub use sweep::{spearman, sweep_prompt_quality, SweepPoint, SweepReport};
pub use train::{train_toy, EpochStats, TrainReport, ValMetrics};

use alloc::string::ToString;

use crate::error::{Error, Result};
use crate::fusion::Step4Query;
use crate::prompt::{LabelScale, PromptKind};

/// Scale applied to depth targets (meters / DEPTH_SCALE).
pub const DEPTH_SCALE: f64 = 20.0;
/// Scale applied to size targets (meters / SIZE_SCALE).
pub const SIZE_SCALE: f64 = 5.0;

/// Where training prompts come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PromptSource {
    /// Boxes predicted by the simulated 2D detector.
    Predicted,
    /// Noiseless projections of the ground-truth cuboids.
    GroundTruth,
}

impl PromptSource {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptSource::Predicted => "predicted",
            PromptSource::GroundTruth => "ground-truth",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "predicted" | "pred" => Ok(Self::Predicted),
            "ground-truth" | "grnd" => Ok(Self::GroundTruth),
            other => Err(Error::UnknownName {
                kind: "prompt source",
                name: other.to_string(),
            }),
        }
    }
}

/// How multiple detections feed the fusion block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PromptBatching {
    /// All prompt groups stacked into one token sequence, so prompts can
    /// attend to each other (default).
    Stacked,
    /// One fusion pass per detection; prompts never see each other.
    PerDetection,
}

impl PromptBatching {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptBatching::Stacked => "stacked",
            PromptBatching::PerDetection => "per_detection",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "stacked" => Ok(Self::Stacked),
            "per_detection" => Ok(Self::PerDetection),
            other => Err(Error::UnknownName {
                kind: "prompt batching mode",
                name: other.to_string(),
            }),
        }
    }
}

/// Learning-rate schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LrSchedule {
    Constant,
    /// Cosine decay to zero over the configured epochs.
    Cosine,
}

/// Architecture knobs of the toy model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub d_model: usize,
    pub heads: usize,
    pub mlp_hidden: usize,
    pub residual: bool,
    pub step4_query: Step4Query,
    pub prompt_kind: PromptKind,
    pub label_scale: LabelScale,
    pub learnable_b: bool,
    pub batching: PromptBatching,
    pub head_hidden: usize,
    pub grid_h: usize,
    pub grid_w: usize,
    pub channels: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_model: 16,
            heads: 1,
            mlp_hidden: 32,
            residual: true,
            step4_query: Step4Query::Image,
            prompt_kind: PromptKind::BoxWithLabel,
            label_scale: LabelScale::Normalized,
            learnable_b: false,
            batching: PromptBatching::Stacked,
            head_hidden: 32,
            grid_h: 6,
            grid_w: 8,
            channels: 16,
        }
    }
}

/// Training hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub prompt_source: PromptSource,
    pub score_filter: f64,
    pub val_fraction: f64,
    pub schedule: LrSchedule,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 8e-4,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 50,
            batch_size: 8,
            seed: 1,
            prompt_source: PromptSource::Predicted,
            score_filter: 0.3,
            val_fraction: 0.25,
            schedule: LrSchedule::Constant,
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::InvalidValue {
                what: "learning rate",
                value: self.lr,
            });
        }
        if self.epochs == 0 {
            return Err(Error::Config {
                message: "epochs must be at least 1".to_string(),
            });
        }
        if self.batch_size == 0 {
            return Err(Error::Config {
                message: "batch size must be at least 1".to_string(),
            });
        }
        if !(0.0..1.0).contains(&self.val_fraction) || self.val_fraction == 0.0 {
            return Err(Error::InvalidValue {
                what: "validation fraction",
                value: self.val_fraction,
            });
        }
        if !(0.0..=1.0).contains(&self.score_filter) {
            return Err(Error::InvalidValue {
                what: "score filter",
                value: self.score_filter,
            });
        }
        Ok(())
    }
}
