use std::ops::Range;

use crate::autodiff::{Tape, Tensor, Var};
use crate::env::{drift_slice, transaction_factor, StateTensor};
use crate::policy::{ParamVars, PolicyParams};

use super::{ReplayBuffer, TrainError};

/// Tape handles produced by [`batch_objective`].
#[derive(Debug, Clone)]
pub struct ObjectiveVars {
    /// Mean log return over the batch, to be maximized.
    pub objective: Var,
    /// Policy outputs, `(B, n + 1)`.
    pub actions: Var,
    /// `ln mu_t` per batch row, as entered on the tape.
    pub log_mu: Vec<f64>,
}

/// Mean over the batch of `ln(mu_t * (a_t . y_t))`.
///
/// `a_t` is the policy output for experience `t`. The factor `mu_t` prices
/// the rebalance from the previous action (drifted by the previous price
/// move) to `a_t`; it is computed from forward values and enters the tape as
/// a constant. Inside the batch the previous action is the policy's own
/// output one row up; for the first row it is the stored `last_action`.
pub fn batch_objective(
    tape: &mut Tape,
    policy: &PolicyParams,
    vars: &ParamVars,
    buffer: &ReplayBuffer,
    range: Range<usize>,
    commission: f64,
) -> Result<ObjectiveVars, TrainError> {
    build(tape, policy, vars, buffer, range, LogMu::Compute(commission))
}

/// [`batch_objective`] with `ln mu_t` supplied instead of computed. With the
/// values from an earlier call this is the exact function whose gradient
/// [`batch_objective`] reports, which makes it the target for finite
/// differences.
pub fn batch_objective_fixed_mu(
    tape: &mut Tape,
    policy: &PolicyParams,
    vars: &ParamVars,
    buffer: &ReplayBuffer,
    range: Range<usize>,
    log_mu: &[f64],
) -> Result<ObjectiveVars, TrainError> {
    if log_mu.len() != range.len() {
        return Err(TrainError::InvalidConfig(format!("{} mu values for a batch of {}", log_mu.len(), range.len())));
    }
    build(tape, policy, vars, buffer, range, LogMu::Fixed(log_mu))
}

enum LogMu<'a> {
    Compute(f64),
    Fixed(&'a [f64]),
}

fn build(
    tape: &mut Tape,
    policy: &PolicyParams,
    vars: &ParamVars,
    buffer: &ReplayBuffer,
    range: Range<usize>,
    mode: LogMu,
) -> Result<ObjectiveVars, TrainError> {
    if range.is_empty() || range.end > buffer.len() {
        return Err(TrainError::BatchTooLarge { batch: range.len(), len: buffer.len() });
    }
    let batch = &buffer.experiences()[range.clone()];
    let states: Vec<&StateTensor> = batch.iter().map(|e| &e.state).collect();
    let last: Vec<&[f64]> = batch.iter().map(|e| e.last_action.as_slice()).collect();
    let actions = policy.forward(tape, vars, &states, &last)?;

    let width = policy.config.n_assets + 1;
    let relatives: Vec<f64> = batch.iter().flat_map(|e| e.relative.as_slice().iter().copied()).collect();
    let y = tape.constant(Tensor::new(vec![batch.len(), width], relatives)?);

    let commission = match mode {
        LogMu::Fixed(values) => return finish(tape, actions, y, values.to_vec()),
        LogMu::Compute(c) => c,
    };
    let a = tape.value(actions).data();
    let mut log_mu = Vec::with_capacity(batch.len());
    for k in 0..batch.len() {
        let current = &a[k * width..(k + 1) * width];
        let previous = if k == 0 { batch[0].last_action.as_slice() } else { &a[(k - 1) * width..k * width] };
        let t = range.start + k;
        let mu = if t == 0 {
            transaction_factor(previous, current, commission)?
        } else {
            let drifted = drift_slice(previous, buffer.get(t - 1).relative.as_slice());
            transaction_factor(&drifted, current, commission)?
        };
        log_mu.push(mu.ln());
    }
    finish(tape, actions, y, log_mu)
}

fn finish(tape: &mut Tape, actions: Var, y: Var, log_mu: Vec<f64>) -> Result<ObjectiveVars, TrainError> {
    let mu_var = tape.constant(Tensor::vector(log_mu.clone()));

    let weighted = tape.mul(actions, y)?;
    let growth = tape.sum_axis(weighted, 1)?;
    let log_growth = tape.log(growth);
    let per_step = tape.add(log_growth, mu_var)?;
    let objective = tape.mean(per_step);
    Ok(ObjectiveVars { objective, actions, log_mu })
}
