//! AdamW: Adam with decoupled weight decay.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::numerics::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct AdamWConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 8e-4,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamWConfig {
    pub fn validate(&self) -> Result<()> {
        for (what, v, lo, hi) in [
            ("beta1", self.beta1, 0.0, 1.0),
            ("beta2", self.beta2, 0.0, 1.0),
        ] {
            if !(v >= lo && v < hi) {
                return Err(Error::InvalidValue { what, value: v });
            }
        }
        if !(self.lr > 0.0) {
            return Err(Error::InvalidValue {
                what: "learning rate",
                value: self.lr,
            });
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidValue {
                what: "adam eps",
                value: self.eps,
            });
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidValue {
                what: "weight decay",
                value: self.weight_decay,
            });
        }
        Ok(())
    }
}

/// First/second-moment accumulators, one pair per parameter tensor.
#[derive(Clone, Debug)]
pub struct AdamWState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
}

impl AdamWState {
    pub fn new(params: &[&Tensor]) -> Self {
        Self {
            m: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One decoupled-weight-decay Adam update:
/// `m <- b1 m + (1-b1) g`, `v <- b2 v + (1-b2) g^2`, bias-corrected,
/// `theta <- theta - lr (m_hat / (sqrt(v_hat) + eps) + wd * theta)`.
///
/// Non-finite gradients abort with a diagnostic naming the parameter index.
pub fn adamw_step(
    params: &mut [&mut Tensor],
    grads: &[&Tensor],
    state: &mut AdamWState,
    cfg: &AdamWConfig,
    lr: f64,
) -> Result<()> {
    cfg.validate()?;
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::ShapeMismatch {
            op: "adamw_step",
            lhs: alloc::vec![params.len()],
            rhs: alloc::vec![grads.len()],
        });
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() {
            return Err(Error::ShapeMismatch {
                op: "adamw_step",
                lhs: p.shape().to_vec(),
                rhs: g.shape().to_vec(),
            });
        }
        if !g.is_finite() {
            let _ = i;
            return Err(Error::NonFinite {
                what: "gradient (training aborted)",
            });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - fmath::powf(cfg.beta1, t as f64);
    let bc2 = 1.0 - fmath::powf(cfg.beta2, t as f64);
    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        let pd = p.data_mut();
        let gd = g.data();
        let md = m.data_mut();
        let vd = v.data_mut();
        for k in 0..pd.len() {
            md[k] = cfg.beta1 * md[k] + (1.0 - cfg.beta1) * gd[k];
            vd[k] = cfg.beta2 * vd[k] + (1.0 - cfg.beta2) * gd[k] * gd[k];
            let m_hat = md[k] / bc1;
            let v_hat = vd[k] / bc2;
            pd[k] -= lr * (m_hat / (fmath::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * pd[k]);
        }
    }
    Ok(())
}
