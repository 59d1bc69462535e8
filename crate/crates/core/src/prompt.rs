//! Encoding of 2D detections into prompt feature tokens.
//!
//! A detection box is normalized to the unit square, its corner (or center)
//! coordinate matrix `A` is mapped through a frozen random projection `B`
//! plus a learnable offset `C` to give `D = A B + C`, and the class label is
//! appended as a constant row, yielding the per-detection token matrix. With
//! the default box-with-label form and `d_model` = 512 the tokens are 3x512.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::geometry::Box2D;
use crate::numerics::{ops, Tape, Tensor, VarId};
use crate::rng::{self, Stream};

/// The standard feature width of the prompt tokens and fusion block.
pub const D_MODEL_STANDARD: usize = 512;

/// How the repeated class-id row is scaled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelScale {
    /// `label / num_classes`, keeping the row in [0, 1) commensurate with
    /// the normalized coordinates (default).
    Normalized,
    /// The raw class id.
    RawId,
}

/// Which prompt form to encode (the box/center and with/without-label
/// ablation grid).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PromptKind {
    /// Normalized corner box plus label row (default; 3 tokens).
    BoxWithLabel,
    /// Normalized corner box only (2 tokens).
    BoxOnly,
    /// Normalized center plus label row (2 tokens).
    CenterWithLabel,
    /// Normalized center only (1 token).
    CenterOnly,
}

impl PromptKind {
    /// Rows of the coordinate matrix `A`.
    pub fn coord_rows(self) -> usize {
        match self {
            PromptKind::BoxWithLabel | PromptKind::BoxOnly => 2,
            PromptKind::CenterWithLabel | PromptKind::CenterOnly => 1,
        }
    }

    pub fn has_label_row(self) -> bool {
        matches!(self, PromptKind::BoxWithLabel | PromptKind::CenterWithLabel)
    }

    /// Tokens contributed by one detection.
    pub fn tokens(self) -> usize {
        self.coord_rows() + usize::from(self.has_label_row())
    }
}

/// Prompt encoder configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptConfig {
    pub d_model: usize,
    pub kind: PromptKind,
    pub label_scale: LabelScale,
    pub num_classes: usize,
    /// When set, `B` joins the trainable parameters instead of staying
    /// frozen after its Gaussian init.
    pub learnable_b: bool,
}

impl PromptConfig {
    /// Full-width configuration over the roadside vocabulary.
    pub fn standard() -> Self {
        Self::new(D_MODEL_STANDARD, crate::grouping::FINE_CLASSES.len())
            .expect("standard dimensions are valid")
    }

    pub fn new(d_model: usize, num_classes: usize) -> Result<Self> {
        if d_model == 0 {
            return Err(Error::Config {
                message: "d_model must be positive".to_string(),
            });
        }
        if num_classes == 0 {
            return Err(Error::Config {
                message: "num_classes must be positive".to_string(),
            });
        }
        Ok(Self {
            d_model,
            kind: PromptKind::BoxWithLabel,
            label_scale: LabelScale::Normalized,
            num_classes,
            learnable_b: false,
        })
    }
}

/// The encoder weights: a frozen Gaussian projection `B: 2 x d` and a
/// zero-initialized learnable offset `C: coord_rows x d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptWeights {
    pub cfg: PromptConfig,
    pub seed: u64,
    b: Tensor,
    c: Tensor,
}

impl PromptWeights {
    /// Draws `B` once from a seeded standard Gaussian; reconstructing with
    /// the same seed reproduces it bitwise. `C` starts at zero.
    pub fn init(seed: u64, cfg: PromptConfig) -> Self {
        let mut rng = rng::derive_rng(seed, Stream::PromptInit, 0);
        let b = Tensor::randn(&[2, cfg.d_model], &mut rng);
        let c = Tensor::zeros(&[cfg.kind.coord_rows(), cfg.d_model]);
        Self { cfg, seed, b, c }
    }

    /// Rebuilds from serialized tensors, revalidating shapes.
    pub fn from_tensors(seed: u64, cfg: PromptConfig, b: Tensor, c: Tensor) -> Result<Self> {
        if b.shape() != [2, cfg.d_model] {
            return Err(Error::ShapeMismatch {
                op: "PromptWeights::from_tensors",
                lhs: b.shape().to_vec(),
                rhs: vec![2, cfg.d_model],
            });
        }
        let rows = cfg.kind.coord_rows();
        if c.shape() != [rows, cfg.d_model] {
            return Err(Error::ShapeMismatch {
                op: "PromptWeights::from_tensors",
                lhs: c.shape().to_vec(),
                rhs: vec![rows, cfg.d_model],
            });
        }
        Ok(Self { cfg, seed, b, c })
    }

    pub fn b(&self) -> &Tensor {
        &self.b
    }

    pub fn c(&self) -> &Tensor {
        &self.c
    }

    pub fn c_mut(&mut self) -> &mut Tensor {
        &mut self.c
    }

    pub fn b_mut(&mut self) -> &mut Tensor {
        &mut self.b
    }

    /// Both tensors, mutably (for optimizer traversal).
    pub fn tensors_mut(&mut self) -> (&mut Tensor, &mut Tensor) {
        (&mut self.b, &mut self.c)
    }

    /// Operator (spectral) norm of `B`, in closed form from the 2x2 Gram
    /// matrix `B B^T`.
    pub fn b_operator_norm(&self) -> f64 {
        let (g00, g01, g11) = {
            let d = self.cfg.d_model;
            let data = self.b.data();
            let (r0, r1) = (&data[..d], &data[d..]);
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            (dot(r0, r0), dot(r0, r1), dot(r1, r1))
        };
        let tr = g00 + g11;
        let det = g00 * g11 - g01 * g01;
        let lambda_max = 0.5 * (tr + fmath::sqrt(f64::max(tr * tr - 4.0 * det, 0.0)));
        fmath::sqrt(lambda_max)
    }
}

/// Feature tokens of one encoded detection.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptFeature {
    /// `tokens x d_model` matrix.
    pub tokens: Tensor,
    /// Index of the detection this prompt came from.
    pub detection_index: usize,
}

fn check_image_dims(image_width: f64, image_height: f64) -> Result<()> {
    if !(image_width > 0.0) || !(image_height > 0.0) {
        return Err(Error::Config {
            message: alloc::format!(
                "image dimensions must be positive, got {image_width} x {image_height}"
            ),
        });
    }
    Ok(())
}

fn check_in_bounds(b: &Box2D, image_width: f64, image_height: f64) -> Result<()> {
    if b.x_min < 0.0 || b.y_min < 0.0 || b.x_max > image_width || b.y_max > image_height {
        return Err(Error::InvalidValue {
            what: "box outside image bounds (clip before encoding)",
            value: b.x_min.min(b.y_min),
        });
    }
    Ok(())
}

/// Normalized top-left/bottom-right coordinate matrix
/// `A = [[x_min/W, y_min/H], [x_max/W, y_max/H]]`; all entries in [0, 1].
pub fn normalize_box(b: &Box2D, image_width: f64, image_height: f64) -> Result<Tensor> {
    check_image_dims(image_width, image_height)?;
    check_in_bounds(b, image_width, image_height)?;
    Tensor::from_vec(
        vec![2, 2],
        vec![
            b.x_min / image_width,
            b.y_min / image_height,
            b.x_max / image_width,
            b.y_max / image_height,
        ],
    )
}

/// Normalized box center as a 1x2 matrix.
pub fn normalize_center(b: &Box2D, image_width: f64, image_height: f64) -> Result<Tensor> {
    check_image_dims(image_width, image_height)?;
    check_in_bounds(b, image_width, image_height)?;
    let [cx, cy] = b.center();
    Tensor::from_vec(vec![1, 2], vec![cx / image_width, cy / image_height])
}

/// Coordinate matrix for the configured prompt kind.
pub fn coord_matrix(
    kind: PromptKind,
    b: &Box2D,
    image_width: f64,
    image_height: f64,
) -> Result<Tensor> {
    match kind.coord_rows() {
        2 => normalize_box(b, image_width, image_height),
        _ => normalize_center(b, image_width, image_height),
    }
}

/// Scaled label value for the repeated class-id row.
pub fn label_value(cfg: &PromptConfig, label: u32) -> Result<f64> {
    if (label as usize) >= cfg.num_classes {
        return Err(Error::UnknownLabel {
            label,
            num_classes: cfg.num_classes,
        });
    }
    Ok(match cfg.label_scale {
        LabelScale::Normalized => label as f64 / cfg.num_classes as f64,
        LabelScale::RawId => label as f64,
    })
}

/// Encodes one detection into its prompt tokens: `D = A B + C` rows followed
/// by the (optional) repeated-label row. Deterministic given the weights.
pub fn encode_prompt(
    det: &Box2D,
    weights: &PromptWeights,
    image_width: f64,
    image_height: f64,
    detection_index: usize,
) -> Result<PromptFeature> {
    let cfg = &weights.cfg;
    let a = coord_matrix(cfg.kind, det, image_width, image_height)?;
    let d = ops::add(&ops::matmul(&a, &weights.b)?, &weights.c)?;
    let tokens = if cfg.kind.has_label_row() {
        let value = label_value(cfg, det.label)?;
        let label_row = Tensor::full(&[1, cfg.d_model], value);
        ops::concat_rows(&[&d, &label_row])?
    } else {
        d
    };
    Ok(PromptFeature {
        tokens,
        detection_index,
    })
}

/// The center-prompt ablation form (center row [+ label row]), regardless of
/// the configured kind.
pub fn encode_center_prompt(
    det: &Box2D,
    weights: &PromptWeights,
    image_width: f64,
    image_height: f64,
    detection_index: usize,
    with_label: bool,
) -> Result<PromptFeature> {
    let kind = if with_label {
        PromptKind::CenterWithLabel
    } else {
        PromptKind::CenterOnly
    };
    let mut cfg = weights.cfg.clone();
    cfg.kind = kind;
    // The center form uses the first row of C (its coordinate matrix has a
    // single row).
    let c = ops::slice_rows(&weights.c, 0, 1)?;
    let w = PromptWeights {
        cfg,
        seed: weights.seed,
        b: weights.b.clone(),
        c,
    };
    encode_prompt(det, &w, image_width, image_height, detection_index)
}

/// Tape-recorded prompt encoding for training. `b` and `c` are the tape ids
/// of the projection tensors (register `B` even when frozen; it simply never
/// joins the optimizer's parameter list).
pub fn encode_prompt_on_tape(
    tape: &mut Tape,
    cfg: &PromptConfig,
    det: &Box2D,
    image_width: f64,
    image_height: f64,
    b: VarId,
    c: VarId,
) -> Result<VarId> {
    let a = coord_matrix(cfg.kind, det, image_width, image_height)?;
    let a = tape.input(a);
    let ab = tape.matmul(a, b)?;
    let d = tape.add(ab, c)?;
    if cfg.kind.has_label_row() {
        let value = label_value(cfg, det.label)?;
        let label_row = tape.input(Tensor::full(&[1, cfg.d_model], value));
        tape.concat_rows(&[d, label_row])
    } else {
        Ok(d)
    }
}

/// Stacks per-detection prompt features into one token sequence, returning
/// the stacked tensor and each detection's token row range.
pub fn stack_prompts(features: &[PromptFeature]) -> Result<(Tensor, Vec<(usize, usize)>)> {
    if features.is_empty() {
        return Err(Error::EmptyPrompt);
    }
    let parts: Vec<&Tensor> = features.iter().map(|f| &f.tokens).collect();
    let stacked = ops::concat_rows(&parts)?;
    let mut ranges = Vec::with_capacity(features.len());
    let mut start = 0;
    for f in features {
        let rows = f.tokens.shape()[0];
        ranges.push((start, rows));
        start += rows;
    }
    Ok((stacked, ranges))
}
