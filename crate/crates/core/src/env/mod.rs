//! Portfolio market simulation.
//!
//! One step rebalances the drifted portfolio to the chosen action (shrinking
//! value by the transaction factor `mu`), then advances prices by one bar:
//! weights drift as `(y * w) / (y . w)` and value grows by `w . y`. The
//! reward is the log return over the step. The market frame is never
//! modified.

mod cost;
mod sim;
mod state;
mod weights;

use thiserror::Error;

pub use cost::{transaction_factor, transaction_factor_oracle};
pub use sim::{EnvState, Environment, StepOutcome};
pub use state::{build_state, StateTensor, FEATURES};
pub use weights::{drift_value, drift_weights, WeightVector, ACTION_TOL, SIMPLEX_TOL};

pub(crate) use weights::drift_slice;

use crate::market::MarketError;
use crate::normalization::NormalizationError;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("action of length {len} is off the simplex (sum {sum})")]
    InvalidAction { sum: f64, len: usize },
    #[error("episode already finished")]
    SteppedAfterTerminal,
    #[error("frame of length {len} is too short for window {window}")]
    FrameTooShort { len: usize, window: usize },
    #[error("window {window} ending at step {step} does not fit frame of length {len}")]
    WindowOutOfRange { step: usize, window: usize, len: usize },
    #[error("transaction factor did not converge (last iterate {last})")]
    NoConvergence { last: f64 },
    #[error("transaction factor root not bracketed")]
    BracketFailure,
    #[error("invalid environment setting: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Normalization(#[from] NormalizationError),
}
