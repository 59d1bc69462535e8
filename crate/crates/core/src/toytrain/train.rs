//! The training loop: AdamW over batched frame losses, with a prompt-free
//! baseline trained under the identical budget.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::fmath;
use crate::geometry::yaw_error_mod_pi;
use crate::numerics::{Tape, Tensor, VarId};
use crate::rng::{self, Stream};

use super::model::{decode_regression, prompted_frame_predictions, BaselineModel, ToyModel, ToyModelVars};
use super::{
    AdamWConfig, AdamWState, LrSchedule, SynthDataset, TrainConfig, TrainFrame, REGRESSION_DIM,
};

/// Loss summary of one epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
}

/// Validation errors in physical units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValMetrics {
    /// Mean absolute depth error, meters.
    pub depth_mae: f64,
    /// Mean absolute yaw error modulo pi, radians.
    pub yaw_mae: f64,
    /// Mean absolute size error over (w, h, l), meters.
    pub size_mae: f64,
    pub examples: usize,
}

/// Full training outcome: per-epoch losses, the per-batch loss trace, and
/// validation errors of both the prompted model and the unprompted baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub batch_losses: Vec<f64>,
    pub val_prompted: ValMetrics,
    pub val_baseline: ValMetrics,
}

fn lr_at(cfg: &TrainConfig, epoch: usize) -> f64 {
    match cfg.schedule {
        LrSchedule::Constant => cfg.lr,
        LrSchedule::Cosine => {
            let t = epoch as f64 / cfg.epochs as f64;
            cfg.lr * 0.5 * (1.0 + fmath::cos(core::f64::consts::PI * t))
        }
    }
}

/// Trains `forward` (a per-frame loss builder over registered parameters)
/// with AdamW, mutating `params` in place. Returns (epoch stats, batch
/// losses).
fn run_training<R, F>(
    frames: &[TrainFrame],
    cfg: &TrainConfig,
    params: &mut [(alloc::string::String, &mut Tensor)],
    trainable: &[bool],
    mut register: R,
    mut forward: F,
) -> Result<(Vec<EpochStats>, Vec<f64>)>
where
    R: FnMut(&mut Tape, &[Tensor]) -> Vec<VarId>,
    F: FnMut(&mut Tape, &[VarId], &TrainFrame) -> Result<Option<VarId>>,
{
    let adamw = AdamWConfig {
        lr: cfg.lr,
        weight_decay: cfg.weight_decay,
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        eps: cfg.eps,
    };
    adamw.validate()?;
    let trainable_refs: Vec<&Tensor> = params
        .iter()
        .zip(trainable)
        .filter(|(_, t)| **t)
        .map(|((_, p), _)| &**p)
        .collect();
    let mut state = AdamWState::new(&trainable_refs);
    drop(trainable_refs);

    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut batch_losses = Vec::new();
    let mut order: Vec<usize> = (0..frames.len()).collect();
    for epoch in 0..cfg.epochs {
        let mut shuffle_rng = rng::derive_rng(cfg.seed, Stream::Training, epoch as u64);
        order.shuffle(&mut shuffle_rng);
        let lr = lr_at(cfg, epoch);
        let mut epoch_loss = 0.0;
        let mut epoch_batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let mut tape = Tape::new();
            let snapshot: Vec<Tensor> = params.iter().map(|(_, p)| (**p).clone()).collect();
            let ids = register(&mut tape, &snapshot);
            let mut losses: Vec<VarId> = Vec::new();
            for &fi in chunk {
                if let Some(loss) = forward(&mut tape, &ids, &frames[fi])? {
                    losses.push(loss);
                }
            }
            if losses.is_empty() {
                continue;
            }
            let mut total = losses[0];
            for &l in &losses[1..] {
                total = tape.add(total, l)?;
            }
            let batch_loss = tape.scale(total, 1.0 / losses.len() as f64);
            let loss_value = tape.value(batch_loss).item()?;
            if !loss_value.is_finite() {
                return Err(Error::NonFinite {
                    what: "training loss",
                });
            }
            let grads = tape.backward(batch_loss)?;

            let mut param_refs: Vec<&mut Tensor> = Vec::new();
            let mut grad_refs: Vec<&Tensor> = Vec::new();
            for (((_, p), &is_trainable), id) in
                params.iter_mut().zip(trainable).zip(&ids)
            {
                if is_trainable {
                    param_refs.push(*p);
                    grad_refs.push(grads.get(*id));
                }
            }
            adamw_step_refs(&mut param_refs, &grad_refs, &mut state, &adamw, lr)?;
            batch_losses.push(loss_value);
            epoch_loss += loss_value;
            epoch_batches += 1;
        }
        epochs.push(EpochStats {
            epoch,
            train_loss: if epoch_batches == 0 {
                0.0
            } else {
                epoch_loss / epoch_batches as f64
            },
        });
    }
    Ok((epochs, batch_losses))
}

fn adamw_step_refs(
    params: &mut Vec<&mut Tensor>,
    grads: &[&Tensor],
    state: &mut AdamWState,
    cfg: &AdamWConfig,
    lr: f64,
) -> Result<()> {
    super::adamw_step(params.as_mut_slice(), grads, state, cfg, lr)
}

fn val_metrics(predictions: &[(Option<Tensor>, &TrainFrame)]) -> ValMetrics {
    let mut depth = 0.0;
    let mut yaw = 0.0;
    let mut size = 0.0;
    let mut n = 0usize;
    for (preds, frame) in predictions {
        let Some(preds) = preds else { continue };
        for (k, e) in frame.examples.iter().enumerate() {
            let row = &preds.data()[k * REGRESSION_DIM..(k + 1) * REGRESSION_DIM];
            let r = decode_regression(row);
            let (gt_depth, gt_yaw, gt_dims) = e.truth;
            depth += fmath::abs(r.depth - gt_depth);
            yaw += yaw_error_mod_pi(r.yaw, gt_yaw);
            size += (0..3).map(|i| fmath::abs(r.dims[i] - gt_dims[i])).sum::<f64>() / 3.0;
            n += 1;
        }
    }
    let denom = n.max(1) as f64;
    ValMetrics {
        depth_mae: depth / denom,
        yaw_mae: yaw / denom,
        size_mae: size / denom,
        examples: n,
    }
}

/// Trains the prompted model and the unprompted baseline on the same data
/// under the same budget; validation always uses the (noisy) predicted
/// prompts baked into the dataset's validation frames.
pub fn train_toy(dataset: &SynthDataset, cfg: &TrainConfig) -> Result<(TrainReport, ToyModel)> {
    cfg.validate()?;
    let mut model = ToyModel::init(cfg.seed, &cfg.model)?;

    // Prompted model.
    let trainable: Vec<bool> = model
        .named_tensors()
        .iter()
        .map(|(name, _)| model.is_trainable(name))
        .collect();
    let model_cfg = model.cfg.clone();
    let prompt_cfg = model.prompt.cfg.clone();
    let fusion_cfg = model.fusion.cfg.clone();
    let (epochs, batch_losses) = {
        let mut named = model.named_tensors_mut();
        let mut params: Vec<(alloc::string::String, &mut Tensor)> = named
            .drain(..)
            .map(|(n, t)| (n, t))
            .collect();
        let pcfg = prompt_cfg.clone();
        let fcfg = fusion_cfg.clone();
        let mcfg = model_cfg.clone();
        run_training(
            &dataset.train,
            cfg,
            &mut params,
            &trainable,
            |tape, snapshot| snapshot.iter().map(|t| tape.input(t.clone())).collect(),
            move |tape, ids, frame| {
                forward_prompted(tape, ids, frame, &pcfg, &fcfg, &mcfg)
            },
        )?
    };

    let val_prompted = {
        let preds: Vec<(Option<Tensor>, &TrainFrame)> = dataset
            .val
            .iter()
            .map(|f| (model.predict_frame(f).unwrap_or(None), f))
            .collect();
        val_metrics(&preds)
    };

    // Baseline under the identical budget.
    let mut baseline = BaselineModel::init(cfg.seed, &cfg.model);
    {
        let mut named = baseline.named_tensors_mut();
        let mut params: Vec<(alloc::string::String, &mut Tensor)> =
            named.drain(..).map(|(n, t)| (n, t)).collect();
        let trainable = alloc::vec![true; params.len()];
        run_training(
            &dataset.train,
            cfg,
            &mut params,
            &trainable,
            |tape, snapshot| snapshot.iter().map(|t| tape.input(t.clone())).collect(),
            forward_baseline,
        )?;
    }
    let val_baseline = {
        let preds: Vec<(Option<Tensor>, &TrainFrame)> = dataset
            .val
            .iter()
            .map(|f| (baseline.predict_frame(f).unwrap_or(None), f))
            .collect();
        val_metrics(&preds)
    };

    Ok((
        TrainReport {
            epochs,
            batch_losses,
            val_prompted,
            val_baseline,
        },
        model,
    ))
}

fn forward_prompted(
    tape: &mut Tape,
    ids: &[VarId],
    frame: &TrainFrame,
    prompt_cfg: &crate::prompt::PromptConfig,
    fusion_cfg: &crate::fusion::FusionConfig,
    model_cfg: &super::ModelConfig,
) -> Result<Option<VarId>> {
    let vars = ToyModelVars::from_flat(ids);
    let Some(preds) =
        prompted_frame_predictions(tape, &vars, prompt_cfg, fusion_cfg, model_cfg.batching, frame)?
    else {
        return Ok(None);
    };
    let n = frame.examples.len();
    let mut data = Vec::with_capacity(n * REGRESSION_DIM);
    for e in &frame.examples {
        data.extend_from_slice(&e.target);
    }
    let t = tape.input(Tensor::from_raw(alloc::vec![n, REGRESSION_DIM], data));
    Ok(Some(tape.smooth_l1(preds, t)?))
}

fn forward_baseline(tape: &mut Tape, ids: &[VarId], frame: &TrainFrame) -> Result<Option<VarId>> {
    if frame.examples.is_empty() {
        return Ok(None);
    }
    let i_raw = tape.input(frame.features.data.clone());
    let projected = tape.matmul(i_raw, ids[0])?;
    let pooled = tape.mean_rows(projected)?;
    let hid = tape.matmul(pooled, ids[1])?;
    let hid = tape.add_row_bias(hid, ids[2])?;
    let hid = tape.relu(hid);
    let out = tape.matmul(hid, ids[3])?;
    let out = tape.add_row_bias(out, ids[4])?;
    let n = frame.examples.len();
    let preds = if n == 1 {
        out
    } else {
        let rows: Vec<VarId> = alloc::vec![out; n];
        tape.concat_rows(&rows)?
    };
    let mut data = Vec::with_capacity(n * REGRESSION_DIM);
    for e in &frame.examples {
        data.extend_from_slice(&e.target);
    }
    let t = tape.input(Tensor::from_raw(alloc::vec![n, REGRESSION_DIM], data));
    Ok(Some(tape.smooth_l1(preds, t)?))
}
