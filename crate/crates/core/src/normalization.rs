//! Input normalization schemes.
//!
//! Two *state* normalizations rescale every observation window on its own
//! (by the last close, or each feature by its own last value), so the agent
//! only ever sees relative price movement. The *data* normalization divides
//! each asset's whole series by one constant fitted on the training period,
//! which keeps absolute price levels visible to the policy.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::StateTensor;
use crate::market::MarketFrame;

#[derive(Debug, Error, PartialEq)]
pub enum NormalizationError {
    #[error("scale for {ticker} is not positive: {scale}")]
    NonPositiveScale { ticker: String, scale: f64 },
    #[error("frame tickers {found:?} do not match fitted tickers {expected:?}")]
    TickerMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("scheme `{0}` has no fitted scales")]
    NotDataMax(NormalizationKind),
    #[error("training frame is empty")]
    EmptyFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationKind {
    LastClose,
    LastPrice,
    DataMax,
}

impl NormalizationKind {
    pub const ALL: [NormalizationKind; 3] =
        [NormalizationKind::LastClose, NormalizationKind::LastPrice, NormalizationKind::DataMax];

    pub fn as_str(&self) -> &'static str {
        match self {
            NormalizationKind::LastClose => "last_close",
            NormalizationKind::LastPrice => "last_price",
            NormalizationKind::DataMax => "data_max",
        }
    }
}

impl fmt::Display for NormalizationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormalizationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NormalizationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| format!("unknown normalization `{}`", s.trim()))
    }
}

/// A normalization ready to use. `DataMax` carries the per-asset scales
/// fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormalizationScheme {
    LastClose,
    LastPrice,
    DataMax { tickers: Vec<String>, scales: Vec<f64> },
}

impl NormalizationScheme {
    pub fn kind(&self) -> NormalizationKind {
        match self {
            NormalizationScheme::LastClose => NormalizationKind::LastClose,
            NormalizationScheme::LastPrice => NormalizationKind::LastPrice,
            NormalizationScheme::DataMax { .. } => NormalizationKind::DataMax,
        }
    }

    /// Turns a raw window into a state. Data normalization is applied to the
    /// whole frame beforehand, so here it only copies the window.
    pub fn normalize_window(&self, window: &RawWindow) -> StateTensor {
        match self {
            NormalizationScheme::LastClose => normalize_last_close(window),
            NormalizationScheme::LastPrice => normalize_last_price(window),
            NormalizationScheme::DataMax { .. } => window.to_state(|_, _| 1.0),
        }
    }
}

/// Raw close/high/low prices for `n` assets over the `t` steps ending at
/// decision step `step` (inclusive). Matrices are `[asset][time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawWindow {
    pub closes: Vec<Vec<f64>>,
    pub highs: Vec<Vec<f64>>,
    pub lows: Vec<Vec<f64>>,
    pub step: usize,
}

impl RawWindow {
    /// Columns `[step + 1 - len, step]` of `frame`. Returns `None` when the
    /// window would start before the first row or end past the last.
    pub fn from_frame(frame: &MarketFrame, step: usize, len: usize) -> Option<RawWindow> {
        if len == 0 || step + 1 < len || step >= frame.len() {
            return None;
        }
        let cols = step + 1 - len..step + 1;
        let cut = |m: &[Vec<f64>]| m.iter().map(|row| row[cols.clone()].to_vec()).collect();
        Some(RawWindow { closes: cut(frame.closes()), highs: cut(frame.highs()), lows: cut(frame.lows()), step })
    }

    pub fn n_assets(&self) -> usize {
        self.closes.len()
    }

    pub fn len(&self) -> usize {
        self.closes.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Builds the (close, high, low) state, dividing plane `f` of asset `i` by
    /// `divisor(f, i)`.
    fn to_state(&self, divisor: impl Fn(usize, usize) -> f64) -> StateTensor {
        let (n, t) = (self.n_assets(), self.len());
        let mut values = Vec::with_capacity(3 * n * t);
        for (f, plane) in [&self.closes, &self.highs, &self.lows].into_iter().enumerate() {
            for (i, row) in plane.iter().enumerate() {
                let d = divisor(f, i);
                values.extend(row.iter().map(|p| p / d));
            }
        }
        StateTensor::new(values, n, t, self.step)
    }
}

/// Every feature of asset `i` divided by asset `i`'s last close.
pub fn normalize_last_close(window: &RawWindow) -> StateTensor {
    let last = window.len() - 1;
    window.to_state(|_, i| window.closes[i][last])
}

/// Each feature of asset `i` divided by that feature's own last value.
pub fn normalize_last_price(window: &RawWindow) -> StateTensor {
    let last = window.len() - 1;
    window.to_state(|f, i| match f {
        0 => window.closes[i][last],
        1 => window.highs[i][last],
        _ => window.lows[i][last],
    })
}

/// Fits one scale per asset: the maximum high over the training rows.
pub fn fit_data_max(train: &MarketFrame) -> Result<NormalizationScheme, NormalizationError> {
    if train.is_empty() {
        return Err(NormalizationError::EmptyFrame);
    }
    let mut scales = Vec::with_capacity(train.n_assets());
    for (ticker, highs) in train.tickers().iter().zip(train.highs()) {
        let scale = highs.iter().fold(f64::NEG_INFINITY, |m, &h| m.max(h.abs()));
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(NormalizationError::NonPositiveScale { ticker: ticker.clone(), scale });
        }
        scales.push(scale);
    }
    Ok(NormalizationScheme::DataMax { tickers: train.tickers().to_vec(), scales })
}

/// Divides every price of asset `i` by its fitted scale. Test-period values
/// may exceed 1.
pub fn apply_data_max(scheme: &NormalizationScheme, frame: &MarketFrame) -> Result<MarketFrame, NormalizationError> {
    let NormalizationScheme::DataMax { tickers, scales } = scheme else {
        return Err(NormalizationError::NotDataMax(scheme.kind()));
    };
    if tickers.as_slice() != frame.tickers() {
        return Err(NormalizationError::TickerMismatch { expected: tickers.clone(), found: frame.tickers().to_vec() });
    }
    Ok(frame.map_prices(|i, p| p / scales[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn window(closes: Vec<Vec<f64>>, highs: Vec<Vec<f64>>, lows: Vec<Vec<f64>>) -> RawWindow {
        let step = closes[0].len() - 1;
        RawWindow { closes, highs, lows, step }
    }

    fn plane(s: &StateTensor, f: usize, i: usize) -> Vec<f64> {
        (0..s.window()).map(|j| s.get(f, i, j)).collect()
    }

    fn frame(highs: Vec<Vec<f64>>, closes: Vec<Vec<f64>>) -> MarketFrame {
        let len = highs[0].len();
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let calendar = (0..len).map(|k| d0 + chrono::Days::new(k as u64)).collect();
        let tickers = (0..highs.len()).map(|i| format!("A{i}")).collect();
        let lows = closes.iter().map(|r| r.iter().map(|c| c * 0.9).collect()).collect();
        MarketFrame::from_matrices(tickers, calendar, closes.clone(), highs, lows, closes)
    }

    #[test]
    fn last_close_divides_by_four() {
        let w = window(vec![vec![1.0, 2.0, 4.0]], vec![vec![1.5, 2.5, 4.4]], vec![vec![0.9, 1.8, 3.8]]);
        let s = normalize_last_close(&w);
        assert_eq!(plane(&s, 0, 0), vec![0.25, 0.5, 1.0]);
        assert_eq!(plane(&s, 1, 0), vec![0.375, 0.625, 1.1]);
        let lows = plane(&s, 2, 0);
        for (a, b) in lows.iter().zip([0.225, 0.45, 0.95]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn last_close_constant_asset_is_ones() {
        let c = vec![vec![7.0; 4]];
        let s = normalize_last_close(&window(c.clone(), c.clone(), c));
        assert!(s.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn last_close_assets_do_not_mix() {
        let w = window(
            vec![vec![1.0, 2.0], vec![10.0, 5.0]],
            vec![vec![1.0, 2.0], vec![10.0, 5.0]],
            vec![vec![1.0, 2.0], vec![10.0, 5.0]],
        );
        let s = normalize_last_close(&w);
        assert_eq!(plane(&s, 0, 0), vec![0.5, 1.0]);
        assert_eq!(plane(&s, 0, 1), vec![2.0, 1.0]);
    }

    #[test]
    fn last_price_uses_per_feature_divisors() {
        let w = window(vec![vec![1.0, 2.0, 4.0]], vec![vec![1.5, 2.5, 5.0]], vec![vec![0.8, 1.6, 3.2]]);
        let s = normalize_last_price(&w);
        assert_eq!(plane(&s, 0, 0), vec![0.25, 0.5, 1.0]);
        assert_eq!(plane(&s, 1, 0), vec![0.3, 0.5, 1.0]);
        assert_eq!(plane(&s, 2, 0), vec![0.25, 0.5, 1.0]);
    }

    #[test]
    fn last_price_matches_last_close_when_divisors_coincide() {
        let w = window(vec![vec![1.0, 2.0, 4.0]], vec![vec![1.5, 2.5, 4.0]], vec![vec![0.8, 1.6, 4.0]]);
        assert_eq!(normalize_last_price(&w), normalize_last_close(&w));
    }

    #[test]
    fn data_max_fits_max_high_per_asset() {
        let f = frame(vec![vec![2.0, 8.0, 4.0], vec![3.0, 3.0, 3.0]], vec![vec![1.9, 7.5, 3.8], vec![3.0, 3.0, 3.0]]);
        let scheme = fit_data_max(&f).unwrap();
        let NormalizationScheme::DataMax { scales, .. } = &scheme else { unreachable!() };
        assert_eq!(scales, &vec![8.0, 3.0]);
        let scaled = apply_data_max(&scheme, &f).unwrap();
        assert_eq!(scaled.closes()[0], vec![0.2375, 0.9375, 0.475]);
        assert_eq!(scaled.highs()[1], vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn data_max_test_values_may_exceed_one() {
        let scheme = NormalizationScheme::DataMax { tickers: vec!["A0".into()], scales: vec![8.0] };
        let test = frame(vec![vec![10.0]], vec![vec![10.0]]);
        assert_eq!(apply_data_max(&scheme, &test).unwrap().closes()[0][0], 1.25);
    }

    #[test]
    fn data_max_unit_scales_are_identity() {
        let f = frame(vec![vec![2.0, 8.0]], vec![vec![1.9, 7.5]]);
        let scheme = NormalizationScheme::DataMax { tickers: vec!["A0".into()], scales: vec![1.0] };
        assert_eq!(apply_data_max(&scheme, &f).unwrap(), f);
    }

    #[test]
    fn data_max_checks_tickers() {
        let f = frame(vec![vec![2.0]], vec![vec![1.9]]);
        let scheme = NormalizationScheme::DataMax { tickers: vec!["B".into()], scales: vec![1.0] };
        assert!(matches!(apply_data_max(&scheme, &f), Err(NormalizationError::TickerMismatch { .. })));
        assert!(matches!(
            apply_data_max(&NormalizationScheme::LastClose, &f),
            Err(NormalizationError::NotDataMax(NormalizationKind::LastClose))
        ));
    }

    #[test]
    fn kind_round_trips_through_str() {
        for k in NormalizationKind::ALL {
            assert_eq!(k.as_str().parse::<NormalizationKind>().unwrap(), k);
        }
    }
}
