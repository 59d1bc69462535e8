//! The prompted toy model (prompt encoder + fusion + head) and the
//! unprompted baseline (pooled image features + head).

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::fmath;
use crate::fusion::{
    decode_head_on_tape, fuse_on_tape, register_fusion, register_head, FusionConfig,
    FusionWeights, HeadWeights,
};
use crate::numerics::{Tape, Tensor, VarId};
use crate::prompt::{encode_prompt_on_tape, PromptConfig, PromptWeights};
use crate::rng::{self, Stream};

use super::{ModelConfig, PromptBatching, TrainFrame, DEPTH_SCALE, SIZE_SCALE};

/// Regression width: depth, sin yaw, cos yaw, w, h, l (scaled).
pub const REGRESSION_DIM: usize = 6;

/// Decoded per-detection prediction in physical units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regression {
    pub depth: f64,
    pub yaw: f64,
    pub dims: [f64; 3],
}

/// Unscales one regression row.
pub fn decode_regression(row: &[f64]) -> Regression {
    Regression {
        depth: row[0] * DEPTH_SCALE,
        yaw: fmath::atan2(row[1], row[2]),
        dims: [row[3] * SIZE_SCALE, row[4] * SIZE_SCALE, row[5] * SIZE_SCALE],
    }
}

/// The composed prompted model.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyModel {
    pub prompt: PromptWeights,
    pub fusion: FusionWeights,
    pub head: HeadWeights,
    pub cfg: ModelConfig,
}

/// Tape bindings of all model tensors for one forward/backward pass.
pub struct ToyModelVars {
    pub prompt_b: VarId,
    pub prompt_c: VarId,
    pub fusion: crate::fusion::FusionVars,
    pub head: crate::fusion::HeadVars,
}

impl ToyModelVars {
    /// Rebuilds the bindings from a flat id slice in
    /// [`ToyModel::named_tensors`] order (2 prompt + 25 fusion + 5 head).
    pub fn from_flat(ids: &[VarId]) -> Self {
        let f = &ids[2..27];
        let h = &ids[27..32];
        Self {
            prompt_b: ids[0],
            prompt_c: ids[1],
            fusion: crate::fusion::FusionVars {
                input_proj: f[0],
                self_attn: [f[1], f[2], f[3], f[4]],
                cross_attn_prompt: [f[5], f[6], f[7], f[8]],
                cross_attn_image: [f[9], f[10], f[11], f[12]],
                mlp: [f[13], f[14], f[15], f[16]],
                norms: [
                    [f[17], f[18]],
                    [f[19], f[20]],
                    [f[21], f[22]],
                    [f[23], f[24]],
                ],
            },
            head: crate::fusion::HeadVars {
                pool: h[0],
                w1: h[1],
                b1: h[2],
                w2: h[3],
                b2: h[4],
            },
        }
    }
}

/// Records the prompted forward pass of one frame: encode each detection's
/// prompt, fuse (stacked or one pass per detection), decode. Returns the
/// `[n, 6]` prediction rows, `None` for frames without usable examples.
pub fn prompted_frame_predictions(
    tape: &mut Tape,
    vars: &ToyModelVars,
    prompt_cfg: &PromptConfig,
    fusion_cfg: &crate::fusion::FusionConfig,
    batching: PromptBatching,
    frame: &TrainFrame,
) -> Result<Option<VarId>> {
    if frame.examples.is_empty() {
        return Ok(None);
    }
    let (calib_w, calib_h) = frame.image_size;
    let per_prompt = prompt_cfg.kind.tokens();
    let mut tokens = Vec::with_capacity(frame.examples.len());
    for e in &frame.examples {
        tokens.push(encode_prompt_on_tape(
            tape,
            prompt_cfg,
            &e.det,
            calib_w,
            calib_h,
            vars.prompt_b,
            vars.prompt_c,
        )?);
    }
    match batching {
        PromptBatching::Stacked => {
            let e_tokens = if tokens.len() == 1 {
                tokens[0]
            } else {
                tape.concat_rows(&tokens)?
            };
            let i_raw = tape.input(frame.features.data.clone());
            let trace = fuse_on_tape(tape, fusion_cfg, e_tokens, i_raw, &vars.fusion)?;
            let groups: Vec<(usize, usize)> = (0..frame.examples.len())
                .map(|k| (k * per_prompt, per_prompt))
                .collect();
            let preds = decode_head_on_tape(tape, trace.j, trace.h, &groups, &vars.head)?;
            Ok(Some(preds))
        }
        PromptBatching::PerDetection => {
            let mut rows = Vec::with_capacity(tokens.len());
            for t in tokens {
                let i_raw = tape.input(frame.features.data.clone());
                let trace = fuse_on_tape(tape, fusion_cfg, t, i_raw, &vars.fusion)?;
                rows.push(decode_head_on_tape(
                    tape,
                    trace.j,
                    trace.h,
                    &[(0, per_prompt)],
                    &vars.head,
                )?);
            }
            if rows.len() == 1 {
                Ok(Some(rows[0]))
            } else {
                Ok(Some(tape.concat_rows(&rows)?))
            }
        }
    }
}

impl ToyModel {
    pub fn init(seed: u64, cfg: &ModelConfig) -> Result<Self> {
        let num_classes = crate::grouping::Vocabulary::roadside().len();
        let mut pcfg = PromptConfig::new(cfg.d_model, num_classes)?;
        pcfg.kind = cfg.prompt_kind;
        pcfg.label_scale = cfg.label_scale;
        pcfg.learnable_b = cfg.learnable_b;
        let prompt = PromptWeights::init(seed, pcfg);

        let mut fcfg = FusionConfig::new(cfg.d_model)?;
        fcfg.heads = cfg.heads;
        fcfg.mlp_hidden = cfg.mlp_hidden;
        fcfg.residual = cfg.residual;
        fcfg.step4_query = cfg.step4_query;
        let fusion = FusionWeights::init(seed, cfg.channels, fcfg)?;

        let head = HeadWeights::init(seed, cfg.d_model, cfg.head_hidden, REGRESSION_DIM);
        Ok(Self {
            prompt,
            fusion,
            head,
            cfg: cfg.clone(),
        })
    }

    /// Named views of every tensor. `prompt.b` is listed but only joins the
    /// trainable set when `learnable_b` is on.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = Vec::new();
        out.push(("prompt.b".into(), self.prompt.b()));
        out.push(("prompt.c".into(), self.prompt.c()));
        for (name, t) in self.fusion.named_tensors() {
            out.push((alloc::format!("fusion.{name}"), t));
        }
        for (name, t) in self.head.named_tensors() {
            out.push((alloc::format!("head.{name}"), t));
        }
        out
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out: Vec<(String, &mut Tensor)> = Vec::new();
        let (b, c) = self.prompt.tensors_mut();
        out.push(("prompt.b".into(), b));
        out.push(("prompt.c".into(), c));
        for (name, t) in self.fusion.named_tensors_mut() {
            out.push((alloc::format!("fusion.{name}"), t));
        }
        for (name, t) in self.head.named_tensors_mut() {
            out.push((alloc::format!("head.{name}"), t));
        }
        out
    }

    /// Whether a named tensor participates in gradient updates. The frozen
    /// random projection `prompt.b` never does unless configured learnable.
    pub fn is_trainable(&self, name: &str) -> bool {
        name != "prompt.b" || self.cfg.learnable_b
    }

    pub fn register(&self, tape: &mut Tape) -> ToyModelVars {
        ToyModelVars {
            prompt_b: tape.input(self.prompt.b().clone()),
            prompt_c: tape.input(self.prompt.c().clone()),
            fusion: register_fusion(tape, &self.fusion),
            head: register_head(tape, &self.head),
        }
    }

    /// Records the forward pass of one frame and returns the `[n, 6]`
    /// prediction rows (None when the frame has no usable examples).
    pub fn frame_predictions_on_tape(
        &self,
        tape: &mut Tape,
        vars: &ToyModelVars,
        frame: &TrainFrame,
    ) -> Result<Option<VarId>> {
        prompted_frame_predictions(
            tape,
            vars,
            &self.prompt.cfg,
            &self.fusion.cfg,
            self.cfg.batching,
            frame,
        )
    }

    /// Smooth-L1 loss of one frame against its targets.
    pub fn frame_loss_on_tape(
        &self,
        tape: &mut Tape,
        vars: &ToyModelVars,
        frame: &TrainFrame,
    ) -> Result<Option<VarId>> {
        let Some(preds) = self.frame_predictions_on_tape(tape, vars, frame)? else {
            return Ok(None);
        };
        let targets = targets_tensor(frame);
        let t = tape.input(targets);
        Ok(Some(tape.smooth_l1(preds, t)?))
    }

    /// Pure per-frame prediction.
    pub fn predict_frame(&self, frame: &TrainFrame) -> Result<Option<Tensor>> {
        let mut tape = Tape::new();
        let vars = self.register(&mut tape);
        let preds = self.frame_predictions_on_tape(&mut tape, &vars, frame)?;
        Ok(preds.map(|id| tape.value(id).clone()))
    }

}

fn targets_tensor(frame: &TrainFrame) -> Tensor {
    let n = frame.examples.len();
    let mut data = Vec::with_capacity(n * REGRESSION_DIM);
    for e in &frame.examples {
        data.extend_from_slice(&e.target);
    }
    Tensor::from_raw(alloc::vec![n, REGRESSION_DIM], data)
}

/// The unprompted baseline: the same head capacity over mean-pooled
/// projected image features, emitting one shared prediction per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineModel {
    pub input_proj: Tensor,
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

pub struct BaselineVars {
    pub input_proj: VarId,
    pub w1: VarId,
    pub b1: VarId,
    pub w2: VarId,
    pub b2: VarId,
}

impl BaselineModel {
    pub fn init(seed: u64, cfg: &ModelConfig) -> Self {
        let d = cfg.d_model;
        let mut rng = rng::derive_rng(seed, Stream::HeadInit, 1);
        let scale = |shape: &[usize], fan_in: usize, rng: &mut rand_chacha::ChaCha8Rng| {
            let mut t = Tensor::randn(shape, rng);
            let s = 1.0 / fmath::sqrt(fan_in as f64);
            for v in t.data_mut() {
                *v *= s;
            }
            t
        };
        Self {
            input_proj: scale(&[cfg.channels, d], cfg.channels, &mut rng),
            w1: scale(&[d, cfg.head_hidden], d, &mut rng),
            b1: Tensor::zeros(&[cfg.head_hidden]),
            w2: scale(&[cfg.head_hidden, REGRESSION_DIM], cfg.head_hidden, &mut rng),
            b2: Tensor::zeros(&[REGRESSION_DIM]),
        }
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        alloc::vec![
            ("baseline.input_proj".into(), &mut self.input_proj),
            ("baseline.w1".into(), &mut self.w1),
            ("baseline.b1".into(), &mut self.b1),
            ("baseline.w2".into(), &mut self.w2),
            ("baseline.b2".into(), &mut self.b2),
        ]
    }

    pub fn register(&self, tape: &mut Tape) -> BaselineVars {
        BaselineVars {
            input_proj: tape.input(self.input_proj.clone()),
            w1: tape.input(self.w1.clone()),
            b1: tape.input(self.b1.clone()),
            w2: tape.input(self.w2.clone()),
            b2: tape.input(self.b2.clone()),
        }
    }

    /// One shared prediction row per frame, replicated over its examples.
    pub fn frame_predictions_on_tape(
        &self,
        tape: &mut Tape,
        vars: &BaselineVars,
        frame: &TrainFrame,
    ) -> Result<Option<VarId>> {
        if frame.examples.is_empty() {
            return Ok(None);
        }
        let i_raw = tape.input(frame.features.data.clone());
        let projected = tape.matmul(i_raw, vars.input_proj)?;
        let pooled = tape.mean_rows(projected)?;
        let hid = tape.matmul(pooled, vars.w1)?;
        let hid = tape.add_row_bias(hid, vars.b1)?;
        let hid = tape.relu(hid);
        let out = tape.matmul(hid, vars.w2)?;
        let out = tape.add_row_bias(out, vars.b2)?;
        let n = frame.examples.len();
        if n == 1 {
            return Ok(Some(out));
        }
        let rows: Vec<VarId> = alloc::vec![out; n];
        let replicated = tape.concat_rows(&rows)?;
        Ok(Some(replicated))
    }

    pub fn frame_loss_on_tape(
        &self,
        tape: &mut Tape,
        vars: &BaselineVars,
        frame: &TrainFrame,
    ) -> Result<Option<VarId>> {
        let Some(preds) = self.frame_predictions_on_tape(tape, vars, frame)? else {
            return Ok(None);
        };
        let t = tape.input(targets_tensor(frame));
        Ok(Some(tape.smooth_l1(preds, t)?))
    }

    pub fn predict_frame(&self, frame: &TrainFrame) -> Result<Option<Tensor>> {
        let mut tape = Tape::new();
        let vars = self.register(&mut tape);
        let preds = self.frame_predictions_on_tape(&mut tape, &vars, frame)?;
        Ok(preds.map(|id| tape.value(id).clone()))
    }
}
