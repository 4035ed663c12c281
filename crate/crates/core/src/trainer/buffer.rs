use crate::env::{Environment, StateTensor, WeightVector};
use crate::market::RelativeVector;
use crate::policy::PolicyParams;

use super::TrainError;

/// What the agent saw and what followed at one decision step.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    /// Decision index in the frame the experience came from.
    pub t: usize,
    pub state: StateTensor,
    /// Policy input for the previous weights; rewritten as the policy learns.
    pub last_action: WeightVector,
    /// Price relatives for the move out of `t`.
    pub relative: RelativeVector,
}

/// One experience per decision step, in time order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayBuffer {
    experiences: Vec<Experience>,
}

impl ReplayBuffer {
    pub fn new() -> Self {
        ReplayBuffer::default()
    }

    pub fn len(&self) -> usize {
        self.experiences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experiences.is_empty()
    }

    pub fn get(&self, i: usize) -> &Experience {
        &self.experiences[i]
    }

    pub fn experiences(&self) -> &[Experience] {
        &self.experiences
    }

    pub fn push(&mut self, e: Experience) {
        self.experiences.push(e);
    }

    pub(crate) fn set_last_action(&mut self, i: usize, w: WeightVector) {
        self.experiences[i].last_action = w;
    }
}

/// Rolls `policy` greedily through one full episode of `env`, storing every
/// step. The first experience's previous weights are all cash.
pub fn fill_buffer(env: &Environment, policy: &PolicyParams) -> Result<ReplayBuffer, TrainError> {
    let (mut state, mut obs) = env.reset();
    let mut last = WeightVector::cash(env.n_assets());
    let mut buffer = ReplayBuffer::new();
    loop {
        let action = policy.act(&obs, &last)?;
        let out = env.step(&state, &action)?;
        buffer.push(Experience { t: state.t, state: obs, last_action: last, relative: out.relative });
        last = action;
        state = out.state;
        match out.observation {
            Some(next) => obs = next,
            None => break,
        }
    }
    Ok(buffer)
}
