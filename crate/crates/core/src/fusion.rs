//! Attention fusion of prompt tokens with image features.
//!
//! The fusion block runs four steps over the stacked prompt tokens `E` and
//! the (projected) image feature `I`:
//!
//! 1. self-attention over `E`, normalize -> `F`
//! 2. cross-attention with query `F`, key/value `I`, normalize -> `G`
//! 3. point-wise MLP on `G`, normalize -> `H`
//! 4. cross-attention with query `I`, key/value `H`, normalize -> `J`
//!
//! Each step optionally adds its input back before normalization (the
//! `residual` flag). Step 4's query side is configurable: the default image
//! query keeps `J` image-shaped for decoding; the alternative prompt-query
//! reading is available behind [`Step4Query::Prompt`].
//!
//! Also here: the channel-concatenation fusion baseline and the
//! per-detection regression head.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::ops::AttnWeights;
use crate::numerics::{ops, Tape, Tensor, VarId, LN_EPS};
use crate::rng::{self, Stream};

/// Which side queries in fusion step 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step4Query {
    /// Query = image feature, key/value = prompt tokens (default; the fused
    /// output stays image-shaped).
    Image,
    /// Query = prompt tokens, key/value = image feature.
    Prompt,
}

impl Step4Query {
    pub fn as_str(self) -> &'static str {
        match self {
            Step4Query::Image => "image",
            Step4Query::Prompt => "prompt",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "image" => Ok(Self::Image),
            "prompt" => Ok(Self::Prompt),
            other => Err(Error::UnknownName {
                kind: "step4 query mode",
                name: other.to_string(),
            }),
        }
    }
}

/// Fusion block configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionConfig {
    pub d_model: usize,
    pub heads: usize,
    pub mlp_hidden: usize,
    pub residual: bool,
    pub step4_query: Step4Query,
    pub ln_eps: f64,
}

impl FusionConfig {
    pub fn new(d_model: usize) -> Result<Self> {
        if d_model < 2 {
            return Err(Error::Config {
                message: "d_model must be at least 2".to_string(),
            });
        }
        Ok(Self {
            d_model,
            heads: 1,
            mlp_hidden: 4 * d_model,
            residual: true,
            step4_query: Step4Query::Image,
            ln_eps: LN_EPS,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.heads == 0 || self.d_model % self.heads != 0 {
            return Err(Error::Config {
                message: alloc::format!(
                    "head count {} must divide d_model {}",
                    self.heads,
                    self.d_model
                ),
            });
        }
        if self.mlp_hidden == 0 {
            return Err(Error::Config {
                message: "mlp_hidden must be positive".to_string(),
            });
        }
        Ok(())
    }
}

/// Per-step layer-norm affine parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct NormWeights {
    pub gain: Tensor,
    pub bias: Tensor,
}

impl NormWeights {
    fn identity(d: usize) -> Self {
        Self {
            gain: Tensor::full(&[d], 1.0),
            bias: Tensor::zeros(&[d]),
        }
    }
}

/// Point-wise MLP parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpWeights {
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

/// All weights of the fusion block.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionWeights {
    pub cfg: FusionConfig,
    /// Projects raw image channels to `d_model`.
    pub input_proj: Tensor,
    pub self_attn: AttnWeights,
    pub cross_attn_prompt: AttnWeights,
    pub mlp: MlpWeights,
    pub cross_attn_image: AttnWeights,
    /// Norms for steps 1-4 in order.
    pub norms: [NormWeights; 4],
}

fn gaussian(shape: &[usize], sigma: f64, rng: &mut rand_chacha::ChaCha8Rng) -> Tensor {
    let mut t = Tensor::randn(shape, rng);
    for v in t.data_mut() {
        *v *= sigma;
    }
    t
}

fn attn_init(d: usize, rng: &mut rand_chacha::ChaCha8Rng) -> AttnWeights {
    let sigma = 1.0 / crate::fmath::sqrt(d as f64);
    AttnWeights {
        wq: gaussian(&[d, d], sigma, rng),
        wk: gaussian(&[d, d], sigma, rng),
        wv: gaussian(&[d, d], sigma, rng),
        wo: gaussian(&[d, d], sigma, rng),
    }
}

impl FusionWeights {
    /// Seeded Gaussian init (scale 1/sqrt(fan-in)); norm gains 1, biases 0.
    pub fn init(seed: u64, c_in: usize, cfg: FusionConfig) -> Result<Self> {
        cfg.validate()?;
        if c_in == 0 {
            return Err(Error::Config {
                message: "image feature channel count must be positive".to_string(),
            });
        }
        let d = cfg.d_model;
        let mut rng = rng::derive_rng(seed, Stream::FusionInit, 0);
        let input_proj = gaussian(&[c_in, d], 1.0 / crate::fmath::sqrt(c_in as f64), &mut rng);
        let self_attn = attn_init(d, &mut rng);
        let cross_attn_prompt = attn_init(d, &mut rng);
        let mlp = MlpWeights {
            w1: gaussian(&[d, cfg.mlp_hidden], 1.0 / crate::fmath::sqrt(d as f64), &mut rng),
            b1: Tensor::zeros(&[cfg.mlp_hidden]),
            w2: gaussian(
                &[cfg.mlp_hidden, d],
                1.0 / crate::fmath::sqrt(cfg.mlp_hidden as f64),
                &mut rng,
            ),
            b2: Tensor::zeros(&[d]),
        };
        let cross_attn_image = attn_init(d, &mut rng);
        let norms = [
            NormWeights::identity(d),
            NormWeights::identity(d),
            NormWeights::identity(d),
            NormWeights::identity(d),
        ];
        Ok(Self {
            cfg,
            input_proj,
            self_attn,
            cross_attn_prompt,
            mlp,
            cross_attn_image,
            norms,
        })
    }

    /// Named views of every tensor, in a stable order (serialization and
    /// optimizer traversal both rely on it).
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = vec![("input_proj".to_string(), &self.input_proj)];
        for (prefix, a) in [
            ("self_attn", &self.self_attn),
            ("cross_attn_prompt", &self.cross_attn_prompt),
            ("cross_attn_image", &self.cross_attn_image),
        ] {
            out.push((alloc::format!("{prefix}.wq"), &a.wq));
            out.push((alloc::format!("{prefix}.wk"), &a.wk));
            out.push((alloc::format!("{prefix}.wv"), &a.wv));
            out.push((alloc::format!("{prefix}.wo"), &a.wo));
        }
        out.push(("mlp.w1".to_string(), &self.mlp.w1));
        out.push(("mlp.b1".to_string(), &self.mlp.b1));
        out.push(("mlp.w2".to_string(), &self.mlp.w2));
        out.push(("mlp.b2".to_string(), &self.mlp.b2));
        for (i, n) in self.norms.iter().enumerate() {
            out.push((alloc::format!("norm{}.gain", i + 1), &n.gain));
            out.push((alloc::format!("norm{}.bias", i + 1), &n.bias));
        }
        out
    }

    /// Mutable counterpart of [`Self::named_tensors`], same order.
    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out: Vec<(String, &mut Tensor)> =
            vec![("input_proj".to_string(), &mut self.input_proj)];
        for (prefix, a) in [
            ("self_attn", &mut self.self_attn),
            ("cross_attn_prompt", &mut self.cross_attn_prompt),
            ("cross_attn_image", &mut self.cross_attn_image),
        ] {
            out.push((alloc::format!("{prefix}.wq"), &mut a.wq));
            out.push((alloc::format!("{prefix}.wk"), &mut a.wk));
            out.push((alloc::format!("{prefix}.wv"), &mut a.wv));
            out.push((alloc::format!("{prefix}.wo"), &mut a.wo));
        }
        out.push(("mlp.w1".to_string(), &mut self.mlp.w1));
        out.push(("mlp.b1".to_string(), &mut self.mlp.b1));
        out.push(("mlp.w2".to_string(), &mut self.mlp.w2));
        out.push(("mlp.b2".to_string(), &mut self.mlp.b2));
        for (i, n) in self.norms.iter_mut().enumerate() {
            out.push((alloc::format!("norm{}.gain", i + 1), &mut n.gain));
            out.push((alloc::format!("norm{}.bias", i + 1), &mut n.bias));
        }
        out
    }
}

/// Spatial image feature: `S x C` with `S = grid_h * grid_w`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageFeature {
    pub data: Tensor,
    pub grid_h: usize,
    pub grid_w: usize,
}

impl ImageFeature {
    pub fn new(data: Tensor, grid_h: usize, grid_w: usize) -> Result<Self> {
        let (s, _) = data.dims2()?;
        if s != grid_h * grid_w {
            return Err(Error::ShapeMismatch {
                op: "ImageFeature::new",
                lhs: vec![s],
                rhs: vec![grid_h, grid_w],
            });
        }
        Ok(Self {
            data,
            grid_h,
            grid_w,
        })
    }

    pub fn positions(&self) -> usize {
        self.grid_h * self.grid_w
    }

    pub fn channels(&self) -> usize {
        self.data.shape()[1]
    }
}

/// Output of the fusion block.
#[derive(Clone, Debug, PartialEq)]
pub struct FusedFeature {
    /// Fused image-side feature (same spatial shape as the input with image
    /// query; token-shaped under the prompt-query reading).
    pub j: Tensor,
    /// Per-prompt token features after step 3.
    pub h: Tensor,
}

/// Tape ids of registered fusion weights.
pub struct FusionVars {
    pub input_proj: VarId,
    pub self_attn: [VarId; 4],
    pub cross_attn_prompt: [VarId; 4],
    pub mlp: [VarId; 4],
    pub cross_attn_image: [VarId; 4],
    pub norms: [[VarId; 2]; 4],
}

/// Registers every fusion tensor on the tape (same order as
/// `named_tensors`).
pub fn register_fusion(tape: &mut Tape, w: &FusionWeights) -> FusionVars {
    let attn = |tape: &mut Tape, a: &AttnWeights| {
        [
            tape.input(a.wq.clone()),
            tape.input(a.wk.clone()),
            tape.input(a.wv.clone()),
            tape.input(a.wo.clone()),
        ]
    };
    let input_proj = tape.input(w.input_proj.clone());
    let self_attn = attn(tape, &w.self_attn);
    let cross_attn_prompt = attn(tape, &w.cross_attn_prompt);
    let cross_attn_image = attn(tape, &w.cross_attn_image);
    let mlp = [
        tape.input(w.mlp.w1.clone()),
        tape.input(w.mlp.b1.clone()),
        tape.input(w.mlp.w2.clone()),
        tape.input(w.mlp.b2.clone()),
    ];
    let mut norms = [[VarId::default(); 2]; 4];
    for (i, n) in w.norms.iter().enumerate() {
        norms[i] = [tape.input(n.gain.clone()), tape.input(n.bias.clone())];
    }
    FusionVars {
        input_proj,
        self_attn,
        cross_attn_prompt,
        mlp,
        cross_attn_image,
        norms,
    }
}

/// Tape ids for the per-step outputs.
pub struct FuseTrace {
    /// Projected image feature `I`.
    pub image: VarId,
    pub f: VarId,
    pub g: VarId,
    pub h: VarId,
    pub j: VarId,
}

/// Records the four fusion steps on the tape; `e_tokens` are the stacked
/// prompt tokens and `i_raw` the unprojected image feature.
pub fn fuse_on_tape(
    tape: &mut Tape,
    cfg: &FusionConfig,
    e_tokens: VarId,
    i_raw: VarId,
    vars: &FusionVars,
) -> Result<FuseTrace> {
    cfg.validate()?;
    let (t_rows, ed) = tape.value(e_tokens).dims2()?;
    if t_rows == 0 {
        return Err(Error::EmptyPrompt);
    }
    if ed != cfg.d_model {
        return Err(Error::ShapeMismatch {
            op: "fuse",
            lhs: tape.value(e_tokens).shape().to_vec(),
            rhs: vec![t_rows, cfg.d_model],
        });
    }
    let (_, c_in) = tape.value(i_raw).dims2()?;
    if tape.value(vars.input_proj).shape() != [c_in, cfg.d_model] {
        return Err(Error::ShapeMismatch {
            op: "fuse input projection",
            lhs: tape.value(vars.input_proj).shape().to_vec(),
            rhs: vec![c_in, cfg.d_model],
        });
    }

    let image = tape.matmul(i_raw, vars.input_proj)?;
    let heads = cfg.heads;
    let eps = cfg.ln_eps;
    let residual = |tape: &mut Tape, x: VarId, base: VarId| -> Result<VarId> {
        if cfg.residual {
            tape.add(x, base)
        } else {
            Ok(x)
        }
    };

    // (1) self-attention over the prompt tokens.
    let [wq, wk, wv, wo] = vars.self_attn;
    let sa = tape.scaled_dot_attention(e_tokens, e_tokens, e_tokens, wq, wk, wv, wo, heads)?;
    let x1 = residual(tape, sa, e_tokens)?;
    let f = tape.layer_norm(x1, vars.norms[0][0], vars.norms[0][1], eps)?;

    // (2) cross-attention: prompt tokens query the image feature.
    let [wq, wk, wv, wo] = vars.cross_attn_prompt;
    let ca = tape.scaled_dot_attention(f, image, image, wq, wk, wv, wo, heads)?;
    let x2 = residual(tape, ca, f)?;
    let g = tape.layer_norm(x2, vars.norms[1][0], vars.norms[1][1], eps)?;

    // (3) point-wise MLP.
    let [w1, b1, w2, b2] = vars.mlp;
    let m = tape.mlp_block(g, w1, b1, w2, b2)?;
    let x3 = residual(tape, m, g)?;
    let h = tape.layer_norm(x3, vars.norms[2][0], vars.norms[2][1], eps)?;

    // (4) final cross-attention.
    let [wq, wk, wv, wo] = vars.cross_attn_image;
    let (cb, base) = match cfg.step4_query {
        Step4Query::Image => (
            tape.scaled_dot_attention(image, h, h, wq, wk, wv, wo, heads)?,
            image,
        ),
        Step4Query::Prompt => (
            tape.scaled_dot_attention(h, image, image, wq, wk, wv, wo, heads)?,
            h,
        ),
    };
    let x4 = residual(tape, cb, base)?;
    let j = tape.layer_norm(x4, vars.norms[3][0], vars.norms[3][1], eps)?;

    Ok(FuseTrace { image, f, g, h, j })
}

/// Pure fusion: stacked prompt tokens + raw image feature -> `(J, H)`.
pub fn fuse(e_tokens: &Tensor, image: &ImageFeature, w: &FusionWeights) -> Result<FusedFeature> {
    let trace = fuse_trace(e_tokens, image, w)?;
    Ok(FusedFeature {
        j: trace.j,
        h: trace.h,
    })
}

/// Per-step output tensors of one fusion pass.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionStepTensors {
    pub image: Tensor,
    pub f: Tensor,
    pub g: Tensor,
    pub h: Tensor,
    pub j: Tensor,
}

/// Pure fusion pass that keeps every intermediate step.
pub fn fuse_trace(
    e_tokens: &Tensor,
    image: &ImageFeature,
    w: &FusionWeights,
) -> Result<FusionStepTensors> {
    let mut tape = Tape::new();
    let e = tape.input(e_tokens.clone());
    let i_raw = tape.input(image.data.clone());
    let vars = register_fusion(&mut tape, w);
    let trace = fuse_on_tape(&mut tape, &w.cfg, e, i_raw, &vars)?;
    Ok(FusionStepTensors {
        image: tape.value(trace.image).clone(),
        f: tape.value(trace.f).clone(),
        g: tape.value(trace.g).clone(),
        h: tape.value(trace.h).clone(),
        j: tape.value(trace.j).clone(),
    })
}

/// Concatenation fusion baseline: channel-wise concat of a 2D-detector
/// feature map with the raw image feature, then a learned projection to
/// `d_model`.
pub fn fuse_concat(feat2d: &Tensor, i_raw: &Tensor, proj: &Tensor) -> Result<Tensor> {
    let (s1, _) = feat2d.dims2()?;
    let (s2, _) = i_raw.dims2()?;
    if s1 != s2 {
        return Err(Error::ShapeMismatch {
            op: "fuse_concat",
            lhs: feat2d.shape().to_vec(),
            rhs: i_raw.shape().to_vec(),
        });
    }
    let cat = ops::concat_cols(&[feat2d, i_raw])?;
    ops::matmul(&cat, proj)
}

/// Tape-recorded concatenation fusion.
pub fn fuse_concat_on_tape(
    tape: &mut Tape,
    feat2d: VarId,
    i_raw: VarId,
    proj: VarId,
) -> Result<VarId> {
    let (s1, _) = tape.value(feat2d).dims2()?;
    let (s2, _) = tape.value(i_raw).dims2()?;
    if s1 != s2 {
        return Err(Error::ShapeMismatch {
            op: "fuse_concat",
            lhs: tape.value(feat2d).shape().to_vec(),
            rhs: tape.value(i_raw).shape().to_vec(),
        });
    }
    let cat = tape.concat_cols(&[feat2d, i_raw])?;
    tape.matmul(cat, proj)
}

/// Regression head weights: an attention-pooling score vector over `J`, then
/// a two-layer MLP over `[pooled prompt tokens, pooled J]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadWeights {
    pub pool: Tensor,
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

impl HeadWeights {
    pub fn init(seed: u64, d_model: usize, hidden: usize, out_dim: usize) -> Self {
        let mut rng = rng::derive_rng(seed, Stream::HeadInit, 0);
        let s_in = 1.0 / crate::fmath::sqrt((2 * d_model) as f64);
        let s_h = 1.0 / crate::fmath::sqrt(hidden as f64);
        Self {
            pool: gaussian(&[d_model, 1], 1.0 / crate::fmath::sqrt(d_model as f64), &mut rng),
            w1: gaussian(&[2 * d_model, hidden], s_in, &mut rng),
            b1: Tensor::zeros(&[hidden]),
            w2: gaussian(&[hidden, out_dim], s_h, &mut rng),
            b2: Tensor::zeros(&[out_dim]),
        }
    }

    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("pool".to_string(), &self.pool),
            ("w1".to_string(), &self.w1),
            ("b1".to_string(), &self.b1),
            ("w2".to_string(), &self.w2),
            ("b2".to_string(), &self.b2),
        ]
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![
            ("pool".to_string(), &mut self.pool),
            ("w1".to_string(), &mut self.w1),
            ("b1".to_string(), &mut self.b1),
            ("w2".to_string(), &mut self.w2),
            ("b2".to_string(), &mut self.b2),
        ]
    }
}

/// Tape ids of registered head weights.
pub struct HeadVars {
    pub pool: VarId,
    pub w1: VarId,
    pub b1: VarId,
    pub w2: VarId,
    pub b2: VarId,
}

pub fn register_head(tape: &mut Tape, w: &HeadWeights) -> HeadVars {
    HeadVars {
        pool: tape.input(w.pool.clone()),
        w1: tape.input(w.w1.clone()),
        b1: tape.input(w.b1.clone()),
        w2: tape.input(w.w2.clone()),
        b2: tape.input(w.b2.clone()),
    }
}

/// Per-detection regression from the fused features: mean-pool each
/// detection's token rows of `H`, concatenate with an attention-pooled
/// readout of `J`, and run the two-layer MLP. Returns one row per detection.
pub fn decode_head_on_tape(
    tape: &mut Tape,
    j: VarId,
    h: VarId,
    groups: &[(usize, usize)],
    vars: &HeadVars,
) -> Result<VarId> {
    if groups.is_empty() {
        return Err(Error::EmptyPrompt);
    }
    let readout = tape.attention_pool(j, vars.pool)?;
    let mut rows = Vec::with_capacity(groups.len());
    for &(start, len) in groups {
        if len == 0 {
            return Err(Error::Config {
                message: "empty prompt token group".to_string(),
            });
        }
        let group = tape.slice_rows(h, start, len)?;
        let pooled = tape.mean_rows(group)?;
        let feats = tape.concat_cols(&[pooled, readout])?;
        let hid = tape.matmul(feats, vars.w1)?;
        let hid = tape.add_row_bias(hid, vars.b1)?;
        let hid = tape.relu(hid);
        let out = tape.matmul(hid, vars.w2)?;
        let out = tape.add_row_bias(out, vars.b2)?;
        rows.push(out);
    }
    if rows.len() == 1 {
        Ok(rows[0])
    } else {
        tape.concat_rows(&rows)
    }
}

/// Pure form of [`decode_head_on_tape`].
pub fn decode_head(
    fused: &FusedFeature,
    groups: &[(usize, usize)],
    w: &HeadWeights,
) -> Result<Tensor> {
    let mut tape = Tape::new();
    let j = tape.input(fused.j.clone());
    let h = tape.input(fused.h.clone());
    let vars = register_head(&mut tape, w);
    let out = decode_head_on_tape(&mut tape, j, h, groups, &vars)?;
    Ok(tape.value(out).clone())
}
