//! EIIE policy: a small convolutional network whose kernels are shared by
//! every asset, so each asset is scored by an identical, independent
//! evaluator looking only at its own price history and its previous weight.
//!
//! ```text
//! (3, n, t) --conv k1, C1, relu--> (C1, n, t-k1+1)
//!           --conv t-k1+1, C2, relu--> (C2, n, 1)
//!           --concat previous risky weights--> (C2+1, n, 1)
//!           --1x1 conv--> n scores --prepend cash bias--> softmax over n+1
//! ```

mod checkpoint;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Tape, Tensor, Var};
use crate::env::{EnvError, StateTensor, WeightVector, FEATURES};

pub use checkpoint::CHECKPOINT_VERSION;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("window {window} too small for first kernel width {k1}")]
    WindowTooSmall { window: usize, k1: usize },
    #[error("policy needs at least one asset")]
    NoAssets,
    #[error("input does not match policy shape: {0}")]
    Input(String),
    #[error(transparent)]
    Shape(#[from] AutodiffError),
    #[error(transparent)]
    Action(#[from] EnvError),
    #[error("checkpoint line {line}: {reason}")]
    Checkpoint { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Network dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub n_assets: usize,
    pub window: usize,
    /// Width of the first temporal kernel.
    pub k1: usize,
    /// Channels after the first convolution.
    pub c1: usize,
    /// Channels after the second convolution.
    pub c2: usize,
}

impl PolicyConfig {
    pub fn new(n_assets: usize, window: usize) -> Self {
        PolicyConfig { n_assets, window, k1: 3, c1: 2, c2: 20 }
    }

    /// Time extent of the second kernel, which consumes what the first leaves.
    pub fn k2(&self) -> usize {
        self.window + 1 - self.k1
    }
}

/// Learnable parameters of the policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub config: PolicyConfig,
    pub seed: u64,
    /// `(C1, 3, k1)`
    pub conv1_kernel: Tensor,
    pub conv1_bias: Tensor,
    /// `(C2, C1, t - k1 + 1)`
    pub conv2_kernel: Tensor,
    pub conv2_bias: Tensor,
    /// `(1, C2 + 1, 1)`
    pub head_kernel: Tensor,
    pub head_bias: Tensor,
    /// Score of the cash asset.
    pub cash_bias: Tensor,
}

/// Number of parameter blocks, in [`PolicyParams::blocks`] order.
pub const BLOCKS: usize = 7;

impl PolicyParams {
    /// Glorot-uniform kernels, zero biases, fully determined by `seed`.
    pub fn init(config: PolicyConfig, seed: u64) -> Result<Self, PolicyError> {
        if config.n_assets == 0 {
            return Err(PolicyError::NoAssets);
        }
        if config.k1 == 0 || config.window < config.k1 + 1 {
            return Err(PolicyError::WindowTooSmall { window: config.window, k1: config.k1 });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |c_out: usize, c_in: usize, k: usize| {
            let limit = (6.0 / ((c_in * k + c_out * k) as f64)).sqrt();
            let data = (0..c_out * c_in * k).map(|_| rng.random_range(-limit..=limit)).collect();
            Tensor::new(vec![c_out, c_in, k], data).expect("sized above")
        };
        let PolicyConfig { k1, c1, c2, .. } = config;
        let conv1_kernel = glorot(c1, FEATURES, k1);
        let conv2_kernel = glorot(c2, c1, config.k2());
        let head_kernel = glorot(1, c2 + 1, 1);
        Ok(PolicyParams {
            config,
            seed,
            conv1_kernel,
            conv1_bias: Tensor::zeros(&[c1]),
            conv2_kernel,
            conv2_bias: Tensor::zeros(&[c2]),
            head_kernel,
            head_bias: Tensor::zeros(&[1]),
            cash_bias: Tensor::zeros(&[1]),
        })
    }

    /// All blocks with their names, in a fixed order.
    pub fn blocks(&self) -> [(&'static str, &Tensor); BLOCKS] {
        [
            ("conv1.kernel", &self.conv1_kernel),
            ("conv1.bias", &self.conv1_bias),
            ("conv2.kernel", &self.conv2_kernel),
            ("conv2.bias", &self.conv2_bias),
            ("head.kernel", &self.head_kernel),
            ("head.bias", &self.head_bias),
            ("cash_bias", &self.cash_bias),
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut Tensor; BLOCKS] {
        [
            &mut self.conv1_kernel,
            &mut self.conv1_bias,
            &mut self.conv2_kernel,
            &mut self.conv2_bias,
            &mut self.head_kernel,
            &mut self.head_bias,
            &mut self.cash_bias,
        ]
    }

    /// Whether block `i` is a convolution kernel (weight decay applies).
    pub fn is_kernel(i: usize) -> bool {
        matches!(i, 0 | 2 | 4)
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|(_, t)| t.data().iter().all(|v| v.is_finite()))
    }

    /// Records the parameters on `tape`, as trainable leaves or constants.
    pub fn attach(&self, tape: &mut Tape, trainable: bool) -> ParamVars {
        let mut put = |t: &Tensor| if trainable { tape.param(t.clone()) } else { tape.constant(t.clone()) };
        ParamVars {
            vars: [
                put(&self.conv1_kernel),
                put(&self.conv1_bias),
                put(&self.conv2_kernel),
                put(&self.conv2_bias),
                put(&self.head_kernel),
                put(&self.head_bias),
                put(&self.cash_bias),
            ],
        }
    }

    /// Action for one state.
    pub fn act(&self, state: &StateTensor, last_action: &WeightVector) -> Result<WeightVector, PolicyError> {
        let mut tape = Tape::new();
        let vars = self.attach(&mut tape, false);
        let out = self.forward(&mut tape, &vars, &[state], &[last_action.as_slice()])?;
        Ok(WeightVector::from_action(tape.value(out).data().to_vec())?)
    }

    /// Batched forward pass. Returns a `(B, n + 1)` variable of simplex rows.
    pub fn forward(
        &self,
        tape: &mut Tape,
        vars: &ParamVars,
        states: &[&StateTensor],
        last_actions: &[&[f64]],
    ) -> Result<Var, PolicyError> {
        let PolicyConfig { n_assets: n, window: t, .. } = self.config;
        let batch = states.len();
        if batch == 0 || last_actions.len() != batch {
            return Err(PolicyError::Input(format!("{batch} states for {} last actions", last_actions.len())));
        }
        let mut x = Vec::with_capacity(batch * FEATURES * n * t);
        let mut prev = Vec::with_capacity(batch * n);
        for (s, w) in states.iter().zip(last_actions) {
            if s.shape() != [FEATURES, n, t] {
                return Err(PolicyError::Input(format!("state shape {:?}, expected {:?}", s.shape(), [FEATURES, n, t])));
            }
            if w.len() != n + 1 {
                return Err(PolicyError::Input(format!("last action of length {}, expected {}", w.len(), n + 1)));
            }
            x.extend_from_slice(s.values());
            prev.extend_from_slice(&w[1..]);
        }
        let [k1, b1, k2, b2, k3, b3, cash] = vars.vars;
        let x = tape.constant(Tensor::new(vec![batch, FEATURES, n, t], x)?);
        let prev = tape.constant(Tensor::new(vec![batch, 1, n, 1], prev)?);

        let h1 = tape.conv1d_over_time(x, k1, Some(b1))?;
        let h1 = tape.relu(h1);
        let h2 = tape.conv1d_over_time(h1, k2, Some(b2))?;
        let h2 = tape.relu(h2);
        let h = tape.concat(&[h2, prev], 1)?;
        let scores = tape.conv1d_over_time(h, k3, Some(b3))?;
        let scores = tape.reshape(scores, &[batch, n])?;
        let cash = tape.expand(cash, &[batch, 1])?;
        let logits = tape.concat(&[cash, scores], 1)?;
        Ok(tape.softmax(logits, 1)?)
    }
}

/// Tape handles for the parameter blocks, in [`PolicyParams::blocks`] order.
#[derive(Debug, Clone, Copy)]
pub struct ParamVars {
    pub vars: [Var; BLOCKS],
}
