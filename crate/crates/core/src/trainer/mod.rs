//! Policy-gradient training.
//!
//! The buffer holds one experience per step of the training episode.
//! Each update samples a contiguous batch (recent batches favoured),
//! ascends the mean log return of that batch through the policy, and then
//! replays the updated policy over the batch to rewrite the stored previous
//! actions. During the backtest each new step is appended to the buffer and
//! followed by a few more updates.

mod adamw;
mod buffer;
mod objective;
mod sampler;
mod trajectory;

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Tape, Tensor};
use crate::env::{EnvError, Environment, WeightVector};
use crate::policy::{PolicyError, PolicyParams, BLOCKS};

pub use adamw::{AdamW, AdamWConfig};
pub use buffer::{fill_buffer, Experience, ReplayBuffer};
pub use objective::{batch_objective, batch_objective_fixed_mu, ObjectiveVars};
pub use sampler::{sample_batch, MAX_REDRAWS};
pub use trajectory::{Trajectory, TrajectoryPoint};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("batch of {batch} does not fit buffer of {len}")]
    BatchTooLarge { batch: usize, len: usize },
    #[error("loss became non-finite ({loss}) at update {step}")]
    NonFiniteLoss { step: u64, loss: f64 },
    #[error("invalid trainer setting: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

/// Training hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Success probability of the geometric batch-start distribution.
    pub sample_bias: f64,
    pub steps: u64,
    /// Updates after every rebalance in the backtest.
    pub online_steps: u64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Loss is averaged and logged every this many updates.
    pub log_every: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            learning_rate: 5e-5,
            batch_size: 200,
            sample_bias: 0.002,
            steps: 300_000,
            online_steps: 30,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            log_every: 100,
        }
    }
}

impl TrainerConfig {
    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            weight_decay: self.weight_decay,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |what: &str| Err(TrainError::InvalidConfig(what.to_string()));
        if !(self.learning_rate >= 0.0) {
            return bad("learning_rate must be non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.sample_bias > 0.0 && self.sample_bias <= 1.0) {
            return bad("sample_bias must be in (0, 1]");
        }
        if !(self.weight_decay >= 0.0 && self.epsilon > 0.0) {
            return bad("weight_decay must be non-negative and epsilon positive");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("moment decays must be in [0, 1)");
        }
        Ok(())
    }
}

/// Logged training curves.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    /// `(update, mean loss over the preceding log_every updates)`
    pub losses: Vec<(u64, f64)>,
    /// `(update, FAPV of a pure evaluation on the validation episode)`
    pub validations: Vec<(u64, f64)>,
}

impl RunLog {
    /// Writes `kind,step,value` rows.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "kind,step,value")?;
        for (s, v) in &self.losses {
            writeln!(out, "loss,{s},{v}")?;
        }
        for (s, v) in &self.validations {
            writeln!(out, "validation_fapv,{s},{v}")?;
        }
        out.flush()
    }
}

/// Owns the policy, its optimizer, the replay buffer and the sampling RNG of
/// one run.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: TrainerConfig,
    policy: PolicyParams,
    optimizer: AdamW,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    commission: f64,
    updates: u64,
    log: RunLog,
    pending_loss: (f64, u64),
    last_batch: Option<std::ops::Range<usize>>,
}

impl Trainer {
    /// Fills the buffer by rolling `policy` through `env` once.
    pub fn new(env: &Environment, policy: PolicyParams, config: TrainerConfig, seed: u64) -> Result<Self, TrainError> {
        let buffer = fill_buffer(env, &policy)?;
        Self::from_buffer(buffer, policy, config, seed, env.commission())
    }

    /// Starts from an existing buffer, which may have been filled by another policy.
    pub fn from_buffer(
        buffer: ReplayBuffer,
        policy: PolicyParams,
        config: TrainerConfig,
        seed: u64,
        commission: f64,
    ) -> Result<Self, TrainError> {
        config.validate()?;
        if config.batch_size > buffer.len() {
            return Err(TrainError::BatchTooLarge { batch: config.batch_size, len: buffer.len() });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Ok(Trainer {
            optimizer: AdamW::new(config.adamw(), &policy),
            config,
            policy,
            buffer,
            rng,
            commission,
            updates: 0,
            log: RunLog::default(),
            pending_loss: (0.0, 0),
            last_batch: None,
        })
    }

    pub fn policy(&self) -> &PolicyParams {
        &self.policy
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn optimizer(&self) -> &AdamW {
        &self.optimizer
    }

    /// Buffer range used by the most recent update.
    pub fn last_batch(&self) -> Option<std::ops::Range<usize>> {
        self.last_batch.clone()
    }

    /// One sampled update; returns the loss (negated objective) before the update.
    pub fn train_step(&mut self) -> Result<f64, TrainError> {
        let range = sample_batch(self.buffer.len(), self.config.batch_size, self.config.sample_bias, &mut self.rng)?;
        let mut tape = Tape::new();
        let vars = self.policy.attach(&mut tape, true);
        let out = batch_objective(&mut tape, &self.policy, &vars, &self.buffer, range.clone(), self.commission)?;
        let loss_var = tape.scale(out.objective, -1.0);
        let loss = tape.value(loss_var).item();
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss { step: self.updates, loss });
        }
        tape.backward(loss_var)?;
        let grads: [Tensor; BLOCKS] = std::array::from_fn(|i| {
            tape.grad(vars.vars[i]).unwrap_or_else(|| Tensor::zeros(tape.shape(vars.vars[i])))
        });
        self.optimizer.update(&mut self.policy, &grads);
        if !self.policy.is_finite() {
            return Err(TrainError::NonFiniteLoss { step: self.updates, loss: f64::NAN });
        }
        self.rewrite(range.clone())?;
        self.last_batch = Some(range);
        self.updates += 1;

        self.pending_loss.0 += loss;
        self.pending_loss.1 += 1;
        if self.config.log_every > 0 && self.updates % self.config.log_every == 0 {
            let (sum, n) = std::mem::take(&mut self.pending_loss);
            self.log.losses.push((self.updates, sum / n as f64));
        }
        Ok(loss)
    }

    /// Replays the current policy over `range`, writing each output into the
    /// next experience's previous-action slot.
    fn rewrite(&mut self, range: std::ops::Range<usize>) -> Result<(), TrainError> {
        for t in range {
            if t + 1 >= self.buffer.len() {
                break;
            }
            let e = self.buffer.get(t);
            let action = self.policy.act(&e.state, &e.last_action)?;
            self.buffer.set_last_action(t + 1, action);
        }
        Ok(())
    }

    /// Runs `steps` updates. When `validation` is given as `(env, every)`, a
    /// pure evaluation on `env` is logged every `every` updates.
    pub fn train(&mut self, steps: u64, validation: Option<(&Environment, u64)>) -> Result<(), TrainError> {
        for _ in 0..steps {
            self.train_step()?;
            if let Some((env, every)) = validation {
                if every > 0 && self.updates % every == 0 {
                    let traj = evaluate(&self.policy, env)?;
                    self.log.validations.push((self.updates, traj.final_value() / traj.initial_value));
                }
            }
        }
        Ok(())
    }

    /// Steps through `env` with the current policy. With `online_steps > 0`
    /// each realised step is appended to the buffer and followed by that many
    /// updates before the next decision.
    pub fn backtest(&mut self, env: &Environment, online_steps: u64) -> Result<Trajectory, TrainError> {
        if online_steps == 0 {
            return evaluate(&self.policy, env);
        }
        let (mut state, mut obs) = env.reset();
        let mut last = WeightVector::cash(env.n_assets());
        let mut traj = Trajectory::new(env.initial_value());
        loop {
            let action = self.policy.act(&obs, &last)?;
            let out = env.step(&state, &action)?;
            traj.points.push(TrajectoryPoint {
                step: state.t,
                date: env.market().calendar()[out.state.t],
                value: out.state.drifted_value,
                action: action.clone(),
                reward: out.reward,
            });
            self.buffer.push(Experience { t: state.t, state: obs, last_action: last, relative: out.relative });
            for _ in 0..online_steps {
                self.train_step()?;
            }
            last = action;
            state = out.state;
            match out.observation {
                Some(next) => obs = next,
                None => break,
            }
        }
        Ok(traj)
    }
}

/// Pure evaluation of `policy` over one episode of `env`.
pub fn evaluate(policy: &PolicyParams, env: &Environment) -> Result<Trajectory, TrainError> {
    let (mut state, mut obs) = env.reset();
    let mut last = WeightVector::cash(env.n_assets());
    let mut traj = Trajectory::new(env.initial_value());
    loop {
        let action = policy.act(&obs, &last)?;
        let out = env.step(&state, &action)?;
        traj.points.push(TrajectoryPoint {
            step: state.t,
            date: env.market().calendar()[out.state.t],
            value: out.state.drifted_value,
            action: action.clone(),
            reward: out.reward,
        });
        last = action;
        state = out.state;
        match out.observation {
            Some(next) => obs = next,
            None => break,
        }
    }
    Ok(traj)
}
