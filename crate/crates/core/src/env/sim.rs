use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{build_state, drift_slice, transaction_factor, EnvError, StateTensor, WeightVector};
use crate::market::{MarketFrame, RelativeVector};
use crate::normalization::{apply_data_max, NormalizationScheme};

/// Immutable market simulator. Prices come from `market`; observations come
/// from `observed`, which differs only under data normalization.
#[derive(Debug, Clone)]
pub struct Environment {
    market: Arc<MarketFrame>,
    observed: Arc<MarketFrame>,
    scheme: NormalizationScheme,
    window: usize,
    initial_value: f64,
    commission: f64,
}

/// Portfolio bookkeeping between two steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    /// Frame index of the next decision.
    pub t: usize,
    /// Weights chosen at the last rebalance.
    pub weights: WeightVector,
    /// `weights` after the latest price move.
    pub drifted: WeightVector,
    pub value: f64,
    pub drifted_value: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: EnvState,
    /// `None` once the episode is over.
    pub observation: Option<StateTensor>,
    /// `ln(V^f_{t+1} / V^f_t)`.
    pub reward: f64,
    pub mu: f64,
    pub relative: RelativeVector,
}

impl Environment {
    /// `frame` holds raw prices. A fitted data-max scheme is applied to a copy
    /// used only for observations.
    pub fn new(
        frame: Arc<MarketFrame>,
        window: usize,
        scheme: NormalizationScheme,
        initial_value: f64,
        commission: f64,
    ) -> Result<Self, EnvError> {
        if window == 0 || frame.len() < window + 1 {
            return Err(EnvError::FrameTooShort { len: frame.len(), window });
        }
        if !(initial_value > 0.0) {
            return Err(EnvError::InvalidConfig(format!("initial value {initial_value}")));
        }
        if !(0.0..1.0).contains(&commission) {
            return Err(EnvError::InvalidConfig(format!("commission rate {commission}")));
        }
        let observed = match &scheme {
            NormalizationScheme::DataMax { .. } => Arc::new(apply_data_max(&scheme, &frame)?),
            _ => Arc::clone(&frame),
        };
        Ok(Environment { market: frame, observed, scheme, window, initial_value, commission })
    }

    pub fn market(&self) -> &MarketFrame {
        &self.market
    }

    pub fn n_assets(&self) -> usize {
        self.market.n_assets()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn commission(&self) -> f64 {
        self.commission
    }

    pub fn initial_value(&self) -> f64 {
        self.initial_value
    }

    pub fn scheme(&self) -> &NormalizationScheme {
        &self.scheme
    }

    /// Index of the first decision.
    pub fn first_step(&self) -> usize {
        self.window - 1
    }

    /// Number of decisions in one episode.
    pub fn decidable_steps(&self) -> usize {
        self.market.len() - self.window
    }

    /// Observation at decision step `t`.
    pub fn observe(&self, t: usize) -> Result<StateTensor, EnvError> {
        build_state(&self.observed, t, self.window, &self.scheme)
    }

    /// Price relatives for the move out of step `t`.
    pub fn relatives_after(&self, t: usize) -> Result<RelativeVector, EnvError> {
        Ok(self.market.price_relatives(t + 1)?)
    }

    /// Fresh episode: all cash, `V_0 = V_0^f` = initial value.
    pub fn reset(&self) -> (EnvState, StateTensor) {
        let t = self.first_step();
        let cash = WeightVector::cash(self.n_assets());
        let state = EnvState {
            t,
            weights: cash.clone(),
            drifted: cash,
            value: self.initial_value,
            drifted_value: self.initial_value,
            done: false,
        };
        let obs = self.observe(t).expect("constructor checked frame length");
        (state, obs)
    }

    /// Rebalances to `action` (paying commission), then lets prices move to
    /// the next step.
    pub fn step(&self, state: &EnvState, action: &WeightVector) -> Result<StepOutcome, EnvError> {
        if state.done {
            return Err(EnvError::SteppedAfterTerminal);
        }
        if action.len() != self.n_assets() + 1 {
            return Err(EnvError::InvalidAction { sum: action.as_slice().iter().sum(), len: action.len() });
        }
        let mu = transaction_factor(state.drifted.as_slice(), action.as_slice(), self.commission)?;
        let value = mu * state.drifted_value;
        let relative = self.relatives_after(state.t)?;
        let growth = action.dot(&relative);
        let drifted_value = value * growth;
        let drifted = WeightVector::from_action(drift_slice(action.as_slice(), relative.as_slice()))?;
        let t = state.t + 1;
        let done = t + 1 >= self.market.len();
        let reward = (drifted_value / state.drifted_value).ln();
        let observation = if done { None } else { Some(self.observe(t)?) };
        Ok(StepOutcome {
            state: EnvState { t, weights: action.clone(), drifted, value, drifted_value, done },
            observation,
            reward,
            mu,
            relative,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn frame(closes: Vec<Vec<f64>>) -> Arc<MarketFrame> {
        let len = closes[0].len();
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let calendar = (0..len).map(|k| d0 + chrono::Days::new(k as u64)).collect();
        let tickers = (0..closes.len()).map(|i| format!("A{i}")).collect();
        Arc::new(MarketFrame::from_matrices(tickers, calendar, closes.clone(), closes.clone(), closes.clone(), closes))
    }

    #[test]
    fn reset_is_all_cash_and_deterministic() {
        let env = Environment::new(frame(vec![vec![1.0; 10]]), 3, NormalizationScheme::LastClose, 100000.0, 0.0025)
            .unwrap();
        let (a, obs) = env.reset();
        assert_eq!(a.weights, WeightVector::cash(1));
        assert_eq!(a.value, 100000.0);
        assert_eq!(a.drifted_value, 100000.0);
        assert_eq!(obs.step(), 2);
        assert_eq!(env.reset().0, a);
    }

    #[test]
    fn window_as_long_as_frame_is_too_short() {
        let err = Environment::new(frame(vec![vec![1.0; 10]]), 10, NormalizationScheme::LastClose, 1.0, 0.0);
        assert!(matches!(err, Err(EnvError::FrameTooShort { .. })));
    }

    #[test]
    fn holding_in_flat_market_earns_nothing() {
        let env = Environment::new(frame(vec![vec![2.0; 6], vec![3.0; 6]]), 2, NormalizationScheme::LastClose, 1.0, 0.0025)
            .unwrap();
        let (s, _) = env.reset();
        let out = env.step(&s, &s.drifted.clone()).unwrap();
        assert_eq!(out.reward, 0.0);
        assert_eq!(out.mu, 1.0);
    }

    #[test]
    fn cash_only_after_liquidation_is_inert() {
        let env = Environment::new(
            frame(vec![vec![1.0, 1.0, 2.0, 3.0, 1.5, 4.0]]),
            2,
            NormalizationScheme::LastClose,
            1.0,
            0.01,
        )
        .unwrap();
        let (mut s, _) = env.reset();
        let first = env.step(&s, &WeightVector::new(vec![0.0, 1.0]).unwrap()).unwrap();
        s = first.state;
        let cash = WeightVector::cash(1);
        let liquidate = env.step(&s, &cash).unwrap();
        assert!((liquidate.reward - liquidate.mu.ln()).abs() < 1e-15);
        let mut s = liquidate.state;
        while !s.done {
            let out = env.step(&s, &cash).unwrap();
            assert_eq!(out.reward, 0.0);
            s = out.state;
        }
        assert!(matches!(env.step(&s, &cash), Err(EnvError::SteppedAfterTerminal)));
    }

    #[test]
    fn episode_length_matches_decidable_steps() {
        let env = Environment::new(frame(vec![vec![1.0; 12]]), 4, NormalizationScheme::LastPrice, 1.0, 0.0).unwrap();
        let (mut s, _) = env.reset();
        let mut n = 0;
        while !s.done {
            s = env.step(&s, &WeightVector::uniform(1)).unwrap().state;
            n += 1;
        }
        assert_eq!(n, env.decidable_steps());
        assert_eq!(n, 8);
    }

    #[test]
    fn wrong_action_length_is_rejected() {
        let env = Environment::new(frame(vec![vec![1.0; 12]]), 4, NormalizationScheme::LastPrice, 1.0, 0.0).unwrap();
        let (s, _) = env.reset();
        assert!(matches!(env.step(&s, &WeightVector::uniform(2)), Err(EnvError::InvalidAction { .. })));
    }
}
