//! Reverse-mode gradient tape over the tensor primitives.
//!
//! Operations are recorded in execution order with their forward values
//! cached; [`Tape::backward`] replays them in reverse (which is reverse
//! topological order, because every operand precedes its use) and
//! accumulates exact analytic gradients. One tape per training step; a tape
//! is single-writer and not meant to be shared across threads.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;

use super::ops;
use super::tensor::Tensor;

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VarId(usize);

enum Op {
    Input,
    Matmul(VarId, VarId),
    Add(VarId, VarId),
    AddRowBias(VarId, VarId),
    Scale(VarId, f64),
    Transpose(VarId),
    Relu(VarId),
    SoftmaxRows(VarId),
    LayerNorm {
        x: VarId,
        gain: VarId,
        bias: VarId,
        eps: f64,
    },
    ConcatRows(Vec<VarId>),
    ConcatCols(Vec<VarId>),
    SliceRows {
        x: VarId,
        start: usize,
    },
    SliceCols {
        x: VarId,
        start: usize,
    },
    MeanRows(VarId),
    Sum(VarId),
    SmoothL1 {
        pred: VarId,
        target: VarId,
    },
}

struct Node {
    op: Op,
    value: Tensor,
}

/// Gradient tape; records primitives and computes exact gradients of a
/// scalar loss with respect to any recorded tensor.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`]. Tensors never touched by the
/// loss get exact-zero gradients.
pub struct Gradients {
    grads: Vec<Tensor>,
}

impl Gradients {
    pub fn get(&self, id: VarId) -> &Tensor {
        &self.grads[id.0]
    }
}

impl Tape {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Registers an input tensor (leaf).
    pub fn input(&mut self, value: Tensor) -> VarId {
        self.push(Op::Input, value)
    }

    /// Forward value of a recorded tensor.
    pub fn value(&self, id: VarId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> VarId {
        self.nodes.push(Node { op, value });
        VarId(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let v = ops::matmul(self.value(a), self.value(b))?;
        Ok(self.push(Op::Matmul(a, b), v))
    }

    pub fn add(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let v = ops::add(self.value(a), self.value(b))?;
        Ok(self.push(Op::Add(a, b), v))
    }

    pub fn add_row_bias(&mut self, x: VarId, bias: VarId) -> Result<VarId> {
        let v = ops::add_row_bias(self.value(x), self.value(bias))?;
        Ok(self.push(Op::AddRowBias(x, bias), v))
    }

    pub fn scale(&mut self, x: VarId, c: f64) -> VarId {
        let v = ops::scale(self.value(x), c);
        self.push(Op::Scale(x, c), v)
    }

    pub fn transpose(&mut self, x: VarId) -> Result<VarId> {
        let v = self.value(x).transposed()?;
        Ok(self.push(Op::Transpose(x), v))
    }

    pub fn relu(&mut self, x: VarId) -> VarId {
        let v = ops::relu(self.value(x));
        self.push(Op::Relu(x), v)
    }

    pub fn softmax_rows(&mut self, x: VarId) -> Result<VarId> {
        let v = ops::softmax_rows(self.value(x))?;
        Ok(self.push(Op::SoftmaxRows(x), v))
    }

    pub fn layer_norm(&mut self, x: VarId, gain: VarId, bias: VarId, eps: f64) -> Result<VarId> {
        let v = ops::layer_norm(self.value(x), self.value(gain), self.value(bias), eps)?;
        Ok(self.push(Op::LayerNorm { x, gain, bias, eps }, v))
    }

    pub fn concat_rows(&mut self, parts: &[VarId]) -> Result<VarId> {
        let tensors: Vec<&Tensor> = parts.iter().map(|&p| self.value(p)).collect();
        let v = ops::concat_rows(&tensors)?;
        Ok(self.push(Op::ConcatRows(parts.to_vec()), v))
    }

    pub fn concat_cols(&mut self, parts: &[VarId]) -> Result<VarId> {
        let tensors: Vec<&Tensor> = parts.iter().map(|&p| self.value(p)).collect();
        let v = ops::concat_cols(&tensors)?;
        Ok(self.push(Op::ConcatCols(parts.to_vec()), v))
    }

    pub fn slice_rows(&mut self, x: VarId, start: usize, rows: usize) -> Result<VarId> {
        let v = ops::slice_rows(self.value(x), start, rows)?;
        Ok(self.push(Op::SliceRows { x, start }, v))
    }

    pub fn slice_cols(&mut self, x: VarId, start: usize, cols: usize) -> Result<VarId> {
        let v = ops::slice_cols(self.value(x), start, cols)?;
        Ok(self.push(Op::SliceCols { x, start }, v))
    }

    pub fn mean_rows(&mut self, x: VarId) -> Result<VarId> {
        let v = ops::mean_rows(self.value(x))?;
        Ok(self.push(Op::MeanRows(x), v))
    }

    pub fn sum(&mut self, x: VarId) -> VarId {
        let v = ops::sum_all(self.value(x));
        self.push(Op::Sum(x), v)
    }

    pub fn smooth_l1(&mut self, pred: VarId, target: VarId) -> Result<VarId> {
        let v = ops::smooth_l1(self.value(pred), self.value(target))?;
        Ok(self.push(Op::SmoothL1 { pred, target }, v))
    }

    /// Scaled dot-product attention composed from recorded primitives:
    /// `softmax((q Wq)(k Wk)^T / sqrt(d_head)) (v Wv) Wo`. With `heads > 1`
    /// the projected tensors are split column-wise into equal head slices
    /// attended independently, then re-concatenated before `Wo`.
    #[allow(clippy::too_many_arguments)]
    pub fn scaled_dot_attention(
        &mut self,
        q: VarId,
        k: VarId,
        v: VarId,
        wq: VarId,
        wk: VarId,
        wv: VarId,
        wo: VarId,
        heads: usize,
    ) -> Result<VarId> {
        let (_, d) = self.value(q).dims2()?;
        if heads == 0 || d % heads != 0 {
            return Err(Error::Config {
                message: alloc::format!("head count {heads} must divide d_model {d}"),
            });
        }
        let qp = self.matmul(q, wq)?;
        let kp = self.matmul(k, wk)?;
        let vp = self.matmul(v, wv)?;
        let dh = d / heads;
        let inv_sqrt = 1.0 / fmath::sqrt(dh as f64);
        let attended = if heads == 1 {
            self.attend_single(qp, kp, vp, inv_sqrt)?
        } else {
            let mut slices = Vec::with_capacity(heads);
            for h in 0..heads {
                let qh = self.slice_cols(qp, h * dh, dh)?;
                let kh = self.slice_cols(kp, h * dh, dh)?;
                let vh = self.slice_cols(vp, h * dh, dh)?;
                slices.push(self.attend_single(qh, kh, vh, inv_sqrt)?);
            }
            self.concat_cols(&slices)?
        };
        self.matmul(attended, wo)
    }

    fn attend_single(&mut self, qp: VarId, kp: VarId, vp: VarId, inv_sqrt: f64) -> Result<VarId> {
        let kt = self.transpose(kp)?;
        let logits = self.matmul(qp, kt)?;
        let scaled = self.scale(logits, inv_sqrt);
        let probs = self.softmax_rows(scaled)?;
        self.matmul(probs, vp)
    }

    /// Point-wise MLP `relu(x W1 + b1) W2 + b2` from recorded primitives.
    pub fn mlp_block(
        &mut self,
        x: VarId,
        w1: VarId,
        b1: VarId,
        w2: VarId,
        b2: VarId,
    ) -> Result<VarId> {
        let h = self.matmul(x, w1)?;
        let h = self.add_row_bias(h, b1)?;
        let h = self.relu(h);
        let h = self.matmul(h, w2)?;
        self.add_row_bias(h, b2)
    }

    /// Attention-pooled readout of `x: [m x d]` with a learned score vector
    /// `w: [d x 1]`: `softmax(x w)^T x -> [1 x d]`.
    pub fn attention_pool(&mut self, x: VarId, w: VarId) -> Result<VarId> {
        let scores = self.matmul(x, w)?;
        let row = self.transpose(scores)?;
        let probs = self.softmax_rows(row)?;
        self.matmul(probs, x)
    }

    /// Backpropagates from a scalar loss; gradients of unrecorded paths are
    /// exactly zero.
    pub fn backward(&self, loss: VarId) -> Result<Gradients> {
        let lt = self.value(loss);
        let lv = lt.item()?;
        if !lv.is_finite() {
            return Err(Error::NonFinite { what: "loss" });
        }
        let n = self.nodes.len();
        let mut grads: Vec<Option<Tensor>> = vec![None; n];
        grads[loss.0] = Some(Tensor::full(lt.shape(), 1.0));

        for idx in (0..n).rev() {
            // Accumulation only ever targets operand ids below `idx`, so the
            // slot is final by the time we visit it; clone and keep it for
            // the caller.
            let Some(gout) = grads[idx].clone() else {
                continue;
            };
            match &self.nodes[idx].op {
                Op::Input => {}
                Op::Matmul(a, b) => {
                    let (da, db) =
                        ops::matmul_backward(self.value(*a), self.value(*b), &gout);
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, gout.clone());
                    accumulate(&mut grads, *b, gout.clone());
                }
                Op::AddRowBias(x, bias) => {
                    let (m, d) = gout.dims2().expect("rank-2 by construction");
                    let mut db = vec![0.0; d];
                    for i in 0..m {
                        for j in 0..d {
                            db[j] += gout.data()[i * d + j];
                        }
                    }
                    accumulate(&mut grads, *x, gout.clone());
                    accumulate(&mut grads, *bias, Tensor::from_raw(vec![d], db));
                }
                Op::Scale(x, c) => {
                    accumulate(&mut grads, *x, ops::scale(&gout, *c));
                }
                Op::Transpose(x) => {
                    let g = gout.transposed().expect("rank-2 by construction");
                    accumulate(&mut grads, *x, g);
                }
                Op::Relu(x) => {
                    accumulate(&mut grads, *x, ops::relu_backward(self.value(*x), &gout));
                }
                Op::SoftmaxRows(x) => {
                    let y = &self.nodes[idx].value;
                    accumulate(&mut grads, *x, ops::softmax_rows_backward(y, &gout));
                }
                Op::LayerNorm { x, gain, bias, eps } => {
                    let (dx, dgain, dbias) =
                        ops::layer_norm_backward(self.value(*x), self.value(*gain), *eps, &gout);
                    accumulate(&mut grads, *x, dx);
                    accumulate(&mut grads, *gain, dgain);
                    accumulate(&mut grads, *bias, dbias);
                }
                Op::ConcatRows(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let rows = self.value(*p).shape()[0];
                        let slice = ops::slice_rows(&gout, start, rows)
                            .expect("slice within concat bounds");
                        accumulate(&mut grads, *p, slice);
                        start += rows;
                    }
                }
                Op::ConcatCols(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let cols = self.value(*p).shape()[1];
                        let slice = ops::slice_cols(&gout, start, cols)
                            .expect("slice within concat bounds");
                        accumulate(&mut grads, *p, slice);
                        start += cols;
                    }
                }
                Op::SliceRows { x, start } => {
                    let (m, d) = self.value(*x).dims2().expect("rank-2 by construction");
                    let (rows, _) = gout.dims2().expect("rank-2 by construction");
                    let mut g = vec![0.0; m * d];
                    g[start * d..(start + rows) * d].copy_from_slice(gout.data());
                    accumulate(&mut grads, *x, Tensor::from_raw(vec![m, d], g));
                }
                Op::SliceCols { x, start } => {
                    let (m, d) = self.value(*x).dims2().expect("rank-2 by construction");
                    let (_, cols) = gout.dims2().expect("rank-2 by construction");
                    let mut g = vec![0.0; m * d];
                    for i in 0..m {
                        g[i * d + start..i * d + start + cols]
                            .copy_from_slice(&gout.data()[i * cols..(i + 1) * cols]);
                    }
                    accumulate(&mut grads, *x, Tensor::from_raw(vec![m, d], g));
                }
                Op::MeanRows(x) => {
                    let (m, d) = self.value(*x).dims2().expect("rank-2 by construction");
                    let inv = 1.0 / m as f64;
                    let mut g = vec![0.0; m * d];
                    for i in 0..m {
                        for j in 0..d {
                            g[i * d + j] = gout.data()[j] * inv;
                        }
                    }
                    accumulate(&mut grads, *x, Tensor::from_raw(vec![m, d], g));
                }
                Op::Sum(x) => {
                    let g = gout.item().expect("scalar by construction");
                    accumulate(&mut grads, *x, Tensor::full(self.value(*x).shape(), g));
                }
                Op::SmoothL1 { pred, target } => {
                    let g = gout.item().expect("scalar by construction");
                    let dp =
                        ops::smooth_l1_backward(self.value(*pred), self.value(*target), g);
                    accumulate(&mut grads, *pred, dp);
                }
            }
        }

        let grads = grads
            .into_iter()
            .enumerate()
            .map(|(i, g)| g.unwrap_or_else(|| Tensor::zeros(self.nodes[i].value.shape())))
            .collect();
        Ok(Gradients { grads })
    }
}

fn accumulate(grads: &mut [Option<Tensor>], id: VarId, contribution: Tensor) {
    match &mut grads[id.0] {
        Some(existing) => {
            for (e, c) in existing.data_mut().iter_mut().zip(contribution.data()) {
                *e += c;
            }
        }
        slot @ None => *slot = Some(contribution),
    }
}
