//! Forward implementations of the tensor primitives and their backward
//! counterparts. The [`Tape`](super::Tape) records these; the free functions
//! here are the pure forward forms.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;

use super::tape::Tape;
use super::tensor::Tensor;

/// Projection matrices of one attention block, each `d x d`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttnWeights {
    pub wq: Tensor,
    pub wk: Tensor,
    pub wv: Tensor,
    pub wo: Tensor,
}

impl AttnWeights {
    pub fn validate(&self, d: usize) -> Result<()> {
        for (name, t) in [
            ("wq", &self.wq),
            ("wk", &self.wk),
            ("wv", &self.wv),
            ("wo", &self.wo),
        ] {
            if t.shape() != [d, d] {
                let _ = name;
                return Err(Error::ShapeMismatch {
                    op: "AttnWeights::validate",
                    lhs: t.shape().to_vec(),
                    rhs: vec![d, d],
                });
            }
        }
        Ok(())
    }
}

fn require_2d(op: &'static str, t: &Tensor) -> Result<(usize, usize)> {
    t.dims2().map_err(|_| Error::ShapeMismatch {
        op,
        lhs: t.shape().to_vec(),
        rhs: vec![0, 0],
    })
}

/// Standard matrix product `[m x k] . [k x n] -> [m x n]`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, ka) = require_2d("matmul", a)?;
    let (kb, n) = require_2d("matmul", b)?;
    if ka != kb {
        return Err(Error::ShapeMismatch {
            op: "matmul",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let (ad, bd) = (a.data(), b.data());
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..ka {
            let aip = ad[i * ka + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &bd[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
    Ok(Tensor::from_raw(vec![m, n], out))
}

/// dC -> (dA, dB) with dA = dC . B^T and dB = A^T . dC.
pub(crate) fn matmul_backward(a: &Tensor, b: &Tensor, dc: &Tensor) -> (Tensor, Tensor) {
    let bt = b.transposed().expect("rank-2 by construction");
    let at = a.transposed().expect("rank-2 by construction");
    let da = matmul(dc, &bt).expect("shapes agree by construction");
    let db = matmul(&at, dc).expect("shapes agree by construction");
    (da, db)
}

/// Row-wise softmax with max-subtraction for stability.
pub fn softmax_rows(x: &Tensor) -> Result<Tensor> {
    let (m, n) = require_2d("softmax_rows", x)?;
    let xd = x.data();
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &xd[i * n..(i + 1) * n];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let orow = &mut out[i * n..(i + 1) * n];
        let mut sum = 0.0;
        for (o, &v) in orow.iter_mut().zip(row) {
            *o = fmath::exp(v - max);
            sum += *o;
        }
        for o in orow.iter_mut() {
            *o /= sum;
        }
    }
    Ok(Tensor::from_raw(vec![m, n], out))
}

/// dX from the softmax output `y` and upstream `dy`:
/// `dx_ij = y_ij * (dy_ij - sum_k dy_ik y_ik)`.
pub(crate) fn softmax_rows_backward(y: &Tensor, dy: &Tensor) -> Tensor {
    let (m, n) = y.dims2().expect("rank-2 by construction");
    let (yd, gd) = (y.data(), dy.data());
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let base = i * n;
        let dot: f64 = (0..n).map(|j| gd[base + j] * yd[base + j]).sum();
        for j in 0..n {
            out[base + j] = yd[base + j] * (gd[base + j] - dot);
        }
    }
    Tensor::from_raw(vec![m, n], out)
}

/// Per-row normalization to mean 0 / variance 1 (biased variance, epsilon
/// inside the square root), then a per-column affine `gain`/`bias`.
pub fn layer_norm(x: &Tensor, gain: &Tensor, bias: &Tensor, eps: f64) -> Result<Tensor> {
    let (m, d) = require_2d("layer_norm", x)?;
    if d < 2 {
        return Err(Error::DegenerateDim {
            op: "layer_norm",
            dim: d,
            min: 2,
        });
    }
    if gain.shape() != [d] || bias.shape() != [d] {
        return Err(Error::ShapeMismatch {
            op: "layer_norm",
            lhs: gain.shape().to_vec(),
            rhs: vec![d],
        });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidValue {
            what: "layer_norm eps",
            value: eps,
        });
    }
    let (xd, gd, bd) = (x.data(), gain.data(), bias.data());
    let mut out = vec![0.0; m * d];
    for i in 0..m {
        let row = &xd[i * d..(i + 1) * d];
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let inv = 1.0 / fmath::sqrt(var + eps);
        let orow = &mut out[i * d..(i + 1) * d];
        for j in 0..d {
            orow[j] = (row[j] - mean) * inv * gd[j] + bd[j];
        }
    }
    Ok(Tensor::from_raw(vec![m, d], out))
}

/// Backward for layer_norm; returns (dx, dgain, dbias).
pub(crate) fn layer_norm_backward(
    x: &Tensor,
    gain: &Tensor,
    eps: f64,
    dy: &Tensor,
) -> (Tensor, Tensor, Tensor) {
    let (m, d) = x.dims2().expect("rank-2 by construction");
    let (xd, gd, dyd) = (x.data(), gain.data(), dy.data());
    let mut dx = vec![0.0; m * d];
    let mut dgain = vec![0.0; d];
    let mut dbias = vec![0.0; d];
    let dn = d as f64;
    for i in 0..m {
        let row = &xd[i * d..(i + 1) * d];
        let gyrow = &dyd[i * d..(i + 1) * d];
        let mean = row.iter().sum::<f64>() / dn;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / dn;
        let inv = 1.0 / fmath::sqrt(var + eps);

        // xhat and the two row reductions of dxhat.
        let mut sum_dxhat = 0.0;
        let mut sum_dxhat_xhat = 0.0;
        for j in 0..d {
            let xhat = (row[j] - mean) * inv;
            let dxhat = gyrow[j] * gd[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
            dgain[j] += gyrow[j] * xhat;
            dbias[j] += gyrow[j];
        }
        for j in 0..d {
            let xhat = (row[j] - mean) * inv;
            let dxhat = gyrow[j] * gd[j];
            dx[i * d + j] = inv * (dxhat - sum_dxhat / dn - xhat * sum_dxhat_xhat / dn);
        }
    }
    (
        Tensor::from_raw(vec![m, d], dx),
        Tensor::from_raw(vec![d], dgain),
        Tensor::from_raw(vec![d], dbias),
    )
}

/// Element-wise max(x, 0).
pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    Tensor::from_raw(x.shape().to_vec(), data)
}

pub(crate) fn relu_backward(x: &Tensor, dy: &Tensor) -> Tensor {
    let data = x
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::from_raw(x.shape().to_vec(), data)
}

/// Element-wise sum of two same-shape tensors.
pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op: "add",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
    Ok(Tensor::from_raw(a.shape().to_vec(), data))
}

/// Adds a `[d]` bias vector to every row of an `[m x d]` tensor.
pub fn add_row_bias(x: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (m, d) = require_2d("add_row_bias", x)?;
    if bias.shape() != [d] {
        return Err(Error::ShapeMismatch {
            op: "add_row_bias",
            lhs: x.shape().to_vec(),
            rhs: bias.shape().to_vec(),
        });
    }
    let bd = bias.data();
    let mut data = x.data().to_vec();
    for i in 0..m {
        for j in 0..d {
            data[i * d + j] += bd[j];
        }
    }
    Ok(Tensor::from_raw(vec![m, d], data))
}

pub fn scale(x: &Tensor, c: f64) -> Tensor {
    let data = x.data().iter().map(|v| v * c).collect();
    Tensor::from_raw(x.shape().to_vec(), data)
}

/// Stacks rank-2 tensors with equal column counts along the row axis.
pub fn concat_rows(parts: &[&Tensor]) -> Result<Tensor> {
    if parts.is_empty() {
        return Err(Error::EmptyPrompt);
    }
    let (_, d) = require_2d("concat_rows", parts[0])?;
    let mut rows = 0;
    let mut data = Vec::new();
    for p in parts {
        let (r, c) = require_2d("concat_rows", p)?;
        if c != d {
            return Err(Error::ShapeMismatch {
                op: "concat_rows",
                lhs: parts[0].shape().to_vec(),
                rhs: p.shape().to_vec(),
            });
        }
        rows += r;
        data.extend_from_slice(p.data());
    }
    Ok(Tensor::from_raw(vec![rows, d], data))
}

/// Stacks rank-2 tensors with equal row counts along the column axis.
pub fn concat_cols(parts: &[&Tensor]) -> Result<Tensor> {
    if parts.is_empty() {
        return Err(Error::EmptyPrompt);
    }
    let (m, _) = require_2d("concat_cols", parts[0])?;
    let mut total = 0;
    for p in parts {
        let (r, c) = require_2d("concat_cols", p)?;
        if r != m {
            return Err(Error::ShapeMismatch {
                op: "concat_cols",
                lhs: parts[0].shape().to_vec(),
                rhs: p.shape().to_vec(),
            });
        }
        total += c;
    }
    let mut data = vec![0.0; m * total];
    let mut offset = 0;
    for p in parts {
        let (_, c) = p.dims2().expect("checked above");
        for i in 0..m {
            data[i * total + offset..i * total + offset + c].copy_from_slice(p.row(i));
        }
        offset += c;
    }
    Ok(Tensor::from_raw(vec![m, total], data))
}

pub fn slice_rows(x: &Tensor, start: usize, rows: usize) -> Result<Tensor> {
    let (m, d) = require_2d("slice_rows", x)?;
    if start + rows > m || rows == 0 {
        return Err(Error::ShapeMismatch {
            op: "slice_rows",
            lhs: vec![start, rows],
            rhs: vec![m, d],
        });
    }
    Ok(Tensor::from_raw(
        vec![rows, d],
        x.data()[start * d..(start + rows) * d].to_vec(),
    ))
}

pub fn slice_cols(x: &Tensor, start: usize, cols: usize) -> Result<Tensor> {
    let (m, d) = require_2d("slice_cols", x)?;
    if start + cols > d || cols == 0 {
        return Err(Error::ShapeMismatch {
            op: "slice_cols",
            lhs: vec![start, cols],
            rhs: vec![m, d],
        });
    }
    let xd = x.data();
    let mut data = vec![0.0; m * cols];
    for i in 0..m {
        data[i * cols..(i + 1) * cols].copy_from_slice(&xd[i * d + start..i * d + start + cols]);
    }
    Ok(Tensor::from_raw(vec![m, cols], data))
}

/// Column-wise mean over rows: `[m x d] -> [1 x d]`.
pub fn mean_rows(x: &Tensor) -> Result<Tensor> {
    let (m, d) = require_2d("mean_rows", x)?;
    let xd = x.data();
    let mut out = vec![0.0; d];
    for i in 0..m {
        for j in 0..d {
            out[j] += xd[i * d + j];
        }
    }
    for o in out.iter_mut() {
        *o /= m as f64;
    }
    Ok(Tensor::from_raw(vec![1, d], out))
}

/// Sum of all entries, as a scalar tensor.
pub fn sum_all(x: &Tensor) -> Tensor {
    Tensor::scalar(x.data().iter().sum())
}

/// Mean smooth-L1 (Huber, delta = 1) between same-shape tensors.
pub fn smooth_l1(pred: &Tensor, target: &Tensor) -> Result<Tensor> {
    if pred.shape() != target.shape() {
        return Err(Error::ShapeMismatch {
            op: "smooth_l1",
            lhs: pred.shape().to_vec(),
            rhs: target.shape().to_vec(),
        });
    }
    let n = pred.numel() as f64;
    let mut acc = 0.0;
    for (&p, &t) in pred.data().iter().zip(target.data()) {
        let e = p - t;
        let a = fmath::abs(e);
        acc += if a <= 1.0 { 0.5 * e * e } else { a - 0.5 };
    }
    Ok(Tensor::scalar(acc / n))
}

pub(crate) fn smooth_l1_backward(pred: &Tensor, target: &Tensor, dy: f64) -> Tensor {
    let n = pred.numel() as f64;
    let data = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let e = p - t;
            dy * e.clamp(-1.0, 1.0) / n
        })
        .collect();
    Tensor::from_raw(pred.shape().to_vec(), data)
}

/// Scaled dot-product attention with learned projections:
/// `softmax_rows((q Wq)(k Wk)^T / sqrt(d_head)) . (v Wv) . Wo`.
///
/// Pure forward form; see [`Tape::scaled_dot_attention`] for the recorded
/// version whose backward pass is exact for all seven inputs.
pub fn scaled_dot_attention(
    q: &Tensor,
    k: &Tensor,
    v: &Tensor,
    w: &AttnWeights,
    heads: usize,
) -> Result<Tensor> {
    let mut tape = Tape::new();
    let qv = tape.input(q.clone());
    let kv = tape.input(k.clone());
    let vv = tape.input(v.clone());
    let wq = tape.input(w.wq.clone());
    let wk = tape.input(w.wk.clone());
    let wv = tape.input(w.wv.clone());
    let wo = tape.input(w.wo.clone());
    let out = tape.scaled_dot_attention(qv, kv, vv, wq, wk, wv, wo, heads)?;
    Ok(tape.value(out).clone())
}

/// Point-wise two-layer MLP: `relu(x W1 + b1) W2 + b2`, applied per row.
pub fn mlp_block(
    x: &Tensor,
    w1: &Tensor,
    b1: &Tensor,
    w2: &Tensor,
    b2: &Tensor,
) -> Result<Tensor> {
    let h = add_row_bias(&matmul(x, w1)?, b1)?;
    let h = relu(&h);
    add_row_bias(&matmul(&h, w2)?, b2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grad_check;
    use crate::rng::{derive_rng, Stream};

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        derive_rng(seed, Stream::Oracle, 0)
    }

    #[test]
    fn matmul_identity() {
        let i2 = Tensor::eye(2);
        let m = Tensor::from_vec(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(matmul(&i2, &m).unwrap(), m);
    }

    #[test]
    fn matmul_sparse_case() {
        let a = Tensor::from_vec(vec![2, 2], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let b = Tensor::from_vec(vec![2, 2], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.data(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let mut rng = rng(17);
        let a = Tensor::randn(&[5, 7], &mut rng);
        let b = Tensor::randn(&[7, 3], &mut rng);
        let c = matmul(&a, &b).unwrap();
        for i in 0..5 {
            for j in 0..3 {
                let mut expect = 0.0;
                for p in 0..7 {
                    expect += a.get2(i, p) * b.get2(p, j);
                }
                assert!((c.get2(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[4, 2]);
        match matmul(&a, &b).unwrap_err() {
            Error::ShapeMismatch { lhs, rhs, .. } => {
                assert_eq!(lhs, vec![2, 3]);
                assert_eq!(rhs, vec![4, 2]);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn matmul_associativity_within_1e9() {
        let mut rng = rng(23);
        for _ in 0..10 {
            let a = Tensor::randn(&[4, 6], &mut rng);
            let b = Tensor::randn(&[6, 5], &mut rng);
            let c = Tensor::randn(&[5, 3], &mut rng);
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            let scale = left.frobenius_norm().max(1.0);
            assert!(left.max_abs_diff(&right).unwrap() / scale < 1e-9);
        }
    }

    #[test]
    fn softmax_uniform_row() {
        let x = Tensor::zeros(&[1, 3]);
        let y = softmax_rows(&x).unwrap();
        for &v in y.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_is_stable_for_large_logits() {
        let x = Tensor::from_vec(vec![1, 2], vec![1000.0, 0.0]).unwrap();
        let y = softmax_rows(&x).unwrap();
        assert!((y.data()[0] - 1.0).abs() < 1e-12);
        assert!(y.data()[1].abs() < 1e-12);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut rng = rng(31);
        let x = Tensor::randn(&[4, 6], &mut rng);
        let y = softmax_rows(&x).unwrap();
        for i in 0..4 {
            let sum: f64 = y.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(y.row(i).iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn softmax_shift_invariance() {
        let mut rng = rng(37);
        let x = Tensor::randn(&[3, 5], &mut rng);
        let mut shifted = x.clone();
        for i in 0..3 {
            let c = 7.5 * (i as f64 + 1.0);
            for j in 0..5 {
                shifted.data_mut()[i * 5 + j] += c;
            }
        }
        let a = softmax_rows(&x).unwrap();
        let b = softmax_rows(&shifted).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
    }

    #[test]
    fn layer_norm_constant_row_maps_to_zero() {
        let x = Tensor::full(&[1, 4], 5.0);
        let y = layer_norm(&x, &Tensor::full(&[4], 1.0), &Tensor::zeros(&[4]), 1e-5).unwrap();
        for &v in y.data() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn layer_norm_identity_on_normalized_row() {
        let x = Tensor::from_vec(vec![1, 2], vec![1.0, -1.0]).unwrap();
        let y = layer_norm(&x, &Tensor::full(&[2], 1.0), &Tensor::zeros(&[2]), 1e-300).unwrap();
        assert!((y.data()[0] - 1.0).abs() < 1e-12);
        assert!((y.data()[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn layer_norm_statistics_match_direct_oracle() {
        let mut rng = rng(41);
        let x = Tensor::randn(&[3, 8], &mut rng);
        let y = layer_norm(&x, &Tensor::full(&[8], 1.0), &Tensor::zeros(&[8]), 1e-12).unwrap();
        for i in 0..3 {
            let row = y.row(i);
            let mean: f64 = row.iter().sum::<f64>() / 8.0;
            let var: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 8.0;
            assert!(mean.abs() < 1e-10, "row {i} mean {mean}");
            assert!((var - 1.0).abs() < 1e-8, "row {i} var {var}");
        }
    }

    #[test]
    fn layer_norm_rejects_degenerate_dim() {
        let x = Tensor::zeros(&[3, 1]);
        let err = layer_norm(&x, &Tensor::full(&[1], 1.0), &Tensor::zeros(&[1]), 1e-5).unwrap_err();
        assert!(matches!(err, Error::DegenerateDim { .. }));
    }

    #[test]
    fn attention_zero_value_projection_gives_zero_output() {
        let mut rng = rng(43);
        let q = Tensor::randn(&[3, 4], &mut rng);
        let k = Tensor::randn(&[5, 4], &mut rng);
        let v = Tensor::randn(&[5, 4], &mut rng);
        let w = AttnWeights {
            wq: Tensor::randn(&[4, 4], &mut rng),
            wk: Tensor::randn(&[4, 4], &mut rng),
            wv: Tensor::zeros(&[4, 4]),
            wo: Tensor::randn(&[4, 4], &mut rng),
        };
        let out = scaled_dot_attention(&q, &k, &v, &w, 1).unwrap();
        assert_eq!(out, Tensor::zeros(&[3, 4]));
    }

    #[test]
    fn attention_uniform_weights_average_values() {
        // Wq = 0 makes every attention row uniform; with Wv = Wo = I each
        // output row is the mean of v's rows.
        let mut rng = rng(47);
        let q = Tensor::randn(&[3, 4], &mut rng);
        let k = Tensor::randn(&[5, 4], &mut rng);
        let v = Tensor::randn(&[5, 4], &mut rng);
        let w = AttnWeights {
            wq: Tensor::zeros(&[4, 4]),
            wk: Tensor::randn(&[4, 4], &mut rng),
            wv: Tensor::eye(4),
            wo: Tensor::eye(4),
        };
        let out = scaled_dot_attention(&q, &k, &v, &w, 1).unwrap();
        let mean = mean_rows(&v).unwrap();
        for i in 0..3 {
            for j in 0..4 {
                assert!((out.get2(i, j) - mean.get2(0, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn attention_gradients_match_finite_differences() {
        let mut rng = rng(53);
        let params = [
            Tensor::randn(&[3, 4], &mut rng),
            Tensor::randn(&[5, 4], &mut rng),
            Tensor::randn(&[5, 4], &mut rng),
            Tensor::randn(&[4, 4], &mut rng),
            Tensor::randn(&[4, 4], &mut rng),
            Tensor::randn(&[4, 4], &mut rng),
            Tensor::randn(&[4, 4], &mut rng),
        ];
        let err = grad_check(&params, 1e-6, |tape, ids| {
            let out = tape.scaled_dot_attention(
                ids[0], ids[1], ids[2], ids[3], ids[4], ids[5], ids[6], 1,
            )?;
            Ok(tape.sum(out))
        })
        .unwrap();
        assert!(err < 1e-5, "relative error {err}");
    }

    #[test]
    fn multi_head_attention_gradients_match_finite_differences() {
        let mut rng = rng(59);
        let params = [
            Tensor::randn(&[2, 4], &mut rng),
            Tensor::randn(&[3, 4], &mut rng),
            Tensor::randn(&[3, 4], &mut rng),
            Tensor::randn(&[4, 4], &mut rng),
            Tensor::randn(&[4, 4], &mut rng),
            Tensor::randn(&[4, 4], &mut rng),
            Tensor::randn(&[4, 4], &mut rng),
        ];
        let err = grad_check(&params, 1e-6, |tape, ids| {
            let out = tape.scaled_dot_attention(
                ids[0], ids[1], ids[2], ids[3], ids[4], ids[5], ids[6], 2,
            )?;
            Ok(tape.sum(out))
        })
        .unwrap();
        assert!(err < 1e-5, "relative error {err}");
    }

    #[test]
    fn mlp_zero_weights_give_zero_output() {
        let mut rng = rng(61);
        let x = Tensor::randn(&[3, 4], &mut rng);
        let out = mlp_block(
            &x,
            &Tensor::zeros(&[4, 8]),
            &Tensor::zeros(&[8]),
            &Tensor::zeros(&[8, 4]),
            &Tensor::zeros(&[4]),
        )
        .unwrap();
        assert_eq!(out, Tensor::zeros(&[3, 4]));
    }

    #[test]
    fn mlp_identity_on_nonnegative_input() {
        let x = Tensor::from_vec(vec![2, 3], vec![0.0, 1.0, 2.5, 0.3, 4.0, 0.0]).unwrap();
        let out = mlp_block(
            &x,
            &Tensor::eye(3),
            &Tensor::zeros(&[3]),
            &Tensor::eye(3),
            &Tensor::zeros(&[3]),
        )
        .unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn mlp_gradients_match_finite_differences() {
        let mut rng = rng(67);
        // Shift inputs away from the ReLU kink so central differences are valid.
        let mut x = Tensor::randn(&[3, 4], &mut rng);
        for v in x.data_mut() {
            if v.abs() < 1e-3 {
                *v += 0.1;
            }
        }
        let params = [
            x,
            Tensor::randn(&[4, 6], &mut rng),
            Tensor::randn(&[6], &mut rng),
            Tensor::randn(&[6, 4], &mut rng),
            Tensor::randn(&[4], &mut rng),
        ];
        let err = grad_check(&params, 1e-6, |tape, ids| {
            let out = tape.mlp_block(ids[0], ids[1], ids[2], ids[3], ids[4])?;
            Ok(tape.sum(out))
        })
        .unwrap();
        assert!(err < 1e-5, "relative error {err}");
    }

    #[test]
    fn smooth_l1_quadratic_and_linear_regions() {
        let pred = Tensor::from_vec(vec![2], vec![0.5, 3.0]).unwrap();
        let target = Tensor::zeros(&[2]);
        let loss = smooth_l1(&pred, &target).unwrap().item().unwrap();
        // (0.5 * 0.25 + (3 - 0.5)) / 2
        assert!((loss - (0.125 + 2.5) / 2.0).abs() < 1e-15);
    }
}
