//! Central finite-difference checking of analytic gradients.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;

use super::tape::{Tape, VarId};
use super::tensor::Tensor;

/// Compares the tape's analytic gradients of a scalar loss against central
/// finite differences at step `h`, entry by entry, and returns
/// `max |analytic - central| / max(1, |central|)` over all parameter entries.
///
/// `build` receives a fresh tape plus the registered parameter ids and must
/// return the loss id. It is re-invoked for every perturbed evaluation, so it
/// must be a pure function of the parameter values.
pub fn grad_check<F>(params: &[Tensor], h: f64, mut build: F) -> Result<f64>
where
    F: FnMut(&mut Tape, &[VarId]) -> Result<VarId>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidValue {
            what: "grad_check step",
            value: h,
        });
    }

    let eval = |values: &[Tensor], build: &mut F, want_grads: bool| -> Result<(f64, Option<Vec<Tensor>>)> {
        let mut tape = Tape::new();
        let ids: Vec<VarId> = values.iter().map(|t| tape.input(t.clone())).collect();
        let loss = build(&mut tape, &ids)?;
        let value = tape.value(loss).item()?;
        if !value.is_finite() {
            return Err(Error::NonFinite { what: "loss" });
        }
        if want_grads {
            let grads = tape.backward(loss)?;
            let gs = ids.iter().map(|&id| grads.get(id).clone()).collect();
            Ok((value, Some(gs)))
        } else {
            Ok((value, None))
        }
    };

    let (_, analytic) = eval(params, &mut build, true)?;
    let analytic = analytic.expect("requested gradients");

    let mut worst = 0.0f64;
    let mut work: Vec<Tensor> = params.to_vec();
    for p in 0..params.len() {
        for j in 0..params[p].numel() {
            let orig = work[p].data()[j];
            work[p].data_mut()[j] = orig + h;
            let (fp, _) = eval(&work, &mut build, false)?;
            work[p].data_mut()[j] = orig - h;
            let (fm, _) = eval(&work, &mut build, false)?;
            work[p].data_mut()[j] = orig;

            let central = (fp - fm) / (2.0 * h);
            let a = analytic[p].data()[j];
            let err = fmath::abs(a - central) / f64::max(1.0, fmath::abs(central));
            worst = worst.max(err);
        }
    }
    Ok(worst)
}
