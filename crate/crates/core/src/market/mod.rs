//! Daily OHLC market data: ingestion, calendar alignment and train/test splits.
//!
//! Asset index 0 is reserved for the implicit cash asset whose price is
//! always 1, so every per-step vector built from a [`MarketFrame`] has
//! length `n + 1` while the frame itself stores only the `n` risky assets.

mod align;
mod load;
mod manifest;
mod split;

use std::hash::{Hash, Hasher};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use align::{align_assets, AlignmentPolicy};
pub use load::{load_ohlc_csv, parse_ohlc_csv};
pub use manifest::{PortfolioManifest, ManifestEntry};
pub use split::{split_periods, DateRange, PeriodSplit};

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: &'static str },
    #[error("{path}:{line}: unparsable row: {reason}")]
    UnparsableRow { path: String, line: u64, reason: String },
    #[error("{ticker}: OHLC ordering violated on {date}")]
    OhlcOrderingViolation { ticker: String, date: NaiveDate },
    #[error("{ticker}: duplicate date {date}")]
    DuplicateDate { ticker: String, date: NaiveDate },
    #[error("{0}: series is empty")]
    EmptySeries(String),
    #[error("no series to align")]
    NoSeries,
    #[error("series share no common date")]
    EmptyIntersection,
    #[error("forward fill leaves no date where every asset has history")]
    NoCommonStart,
    #[error("train range {train} overlaps or follows test range {test}")]
    RangesOverlap { train: DateRange, test: DateRange },
    #[error("range {0} contains no calendar date")]
    EmptyRange(DateRange),
    #[error("train period has {rows} rows, need at least {needed}")]
    InsufficientTrainLength { rows: usize, needed: usize },
    #[error("step {t} out of range for frame of length {len}")]
    IndexOutOfRange { t: usize, len: usize },
    #[error("manifest {path}:{line}: {reason}")]
    Manifest { path: String, line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One daily bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhlcRow {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl OhlcRow {
    pub fn is_consistent(&self) -> bool {
        let all_positive = [self.open, self.high, self.low, self.close]
            .iter()
            .all(|p| p.is_finite() && *p > 0.0);
        all_positive
            && self.low <= self.close
            && self.close <= self.high
            && self.low <= self.open
            && self.open <= self.high
    }
}

/// Validated price history of a single asset, sorted by date.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetSeries {
    ticker: String,
    rows: Vec<OhlcRow>,
}

impl AssetSeries {
    /// Sorts the rows by date and checks the OHLC invariants.
    pub fn new(ticker: impl Into<String>, mut rows: Vec<OhlcRow>) -> Result<Self, MarketError> {
        let ticker = ticker.into();
        if rows.is_empty() {
            return Err(MarketError::EmptySeries(ticker));
        }
        rows.sort_by_key(|r| r.date);
        for pair in rows.windows(2) {
            if pair[0].date == pair[1].date {
                return Err(MarketError::DuplicateDate { ticker, date: pair[0].date });
            }
        }
        if let Some(bad) = rows.iter().find(|r| !r.is_consistent()) {
            return Err(MarketError::OhlcOrderingViolation { ticker, date: bad.date });
        }
        Ok(Self { ticker, rows })
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn rows(&self) -> &[OhlcRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Aligned price history for `n` risky assets over a shared calendar.
///
/// Price matrices are indexed `[asset][step]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketFrame {
    tickers: Vec<String>,
    calendar: Vec<NaiveDate>,
    opens: Vec<Vec<f64>>,
    highs: Vec<Vec<f64>>,
    lows: Vec<Vec<f64>>,
    closes: Vec<Vec<f64>>,
}

impl MarketFrame {
    /// Builds a frame from per-asset aligned rows. All row lists must share
    /// `calendar` exactly; this is checked with `assert!` since callers inside
    /// the crate construct them from an alignment pass.
    pub fn from_rows(tickers: Vec<String>, calendar: Vec<NaiveDate>, rows: Vec<Vec<OhlcRow>>) -> Self {
        assert_eq!(tickers.len(), rows.len());
        let mut frame = MarketFrame {
            tickers,
            calendar,
            opens: Vec::with_capacity(rows.len()),
            highs: Vec::with_capacity(rows.len()),
            lows: Vec::with_capacity(rows.len()),
            closes: Vec::with_capacity(rows.len()),
        };
        for asset in rows {
            assert_eq!(asset.len(), frame.calendar.len());
            frame.opens.push(asset.iter().map(|r| r.open).collect());
            frame.highs.push(asset.iter().map(|r| r.high).collect());
            frame.lows.push(asset.iter().map(|r| r.low).collect());
            frame.closes.push(asset.iter().map(|r| r.close).collect());
        }
        frame
    }

    /// Builds a frame directly from price matrices (`[asset][step]`).
    pub fn from_matrices(
        tickers: Vec<String>,
        calendar: Vec<NaiveDate>,
        opens: Vec<Vec<f64>>,
        highs: Vec<Vec<f64>>,
        lows: Vec<Vec<f64>>,
        closes: Vec<Vec<f64>>,
    ) -> Self {
        let n = tickers.len();
        let len = calendar.len();
        for m in [&opens, &highs, &lows, &closes] {
            assert_eq!(m.len(), n, "matrix asset count");
            assert!(m.iter().all(|row| row.len() == len), "matrix length");
        }
        MarketFrame { tickers, calendar, opens, highs, lows, closes }
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn calendar(&self) -> &[NaiveDate] {
        &self.calendar
    }

    /// Number of risky assets (excludes cash).
    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    /// Number of time steps.
    pub fn len(&self) -> usize {
        self.calendar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.calendar.is_empty()
    }

    pub fn opens(&self) -> &[Vec<f64>] {
        &self.opens
    }

    pub fn highs(&self) -> &[Vec<f64>] {
        &self.highs
    }

    pub fn lows(&self) -> &[Vec<f64>] {
        &self.lows
    }

    pub fn closes(&self) -> &[Vec<f64>] {
        &self.closes
    }

    /// Contiguous sub-frame over `range` of step indices.
    pub fn slice(&self, range: std::ops::Range<usize>) -> MarketFrame {
        let cut = |m: &[Vec<f64>]| m.iter().map(|row| row[range.clone()].to_vec()).collect();
        MarketFrame {
            tickers: self.tickers.clone(),
            calendar: self.calendar[range.clone()].to_vec(),
            opens: cut(&self.opens),
            highs: cut(&self.highs),
            lows: cut(&self.lows),
            closes: cut(&self.closes),
        }
    }

    /// Applies `f(asset, price)` to every price of every feature.
    pub fn map_prices(&self, f: impl Fn(usize, f64) -> f64) -> MarketFrame {
        let map = |m: &[Vec<f64>]| {
            m.iter()
                .enumerate()
                .map(|(i, row)| row.iter().map(|&p| f(i, p)).collect())
                .collect()
        };
        MarketFrame {
            tickers: self.tickers.clone(),
            calendar: self.calendar.clone(),
            opens: map(&self.opens),
            highs: map(&self.highs),
            lows: map(&self.lows),
            closes: map(&self.closes),
        }
    }

    /// Price relatives `y_t` for the move from step `t - 1` to `t`, with the
    /// cash entry fixed at 1.
    pub fn price_relatives(&self, t: usize) -> Result<RelativeVector, MarketError> {
        if t == 0 || t >= self.len() {
            return Err(MarketError::IndexOutOfRange { t, len: self.len() });
        }
        let mut y = Vec::with_capacity(self.n_assets() + 1);
        y.push(1.0);
        y.extend(self.closes.iter().map(|row| row[t] / row[t - 1]));
        Ok(RelativeVector(y))
    }

    /// Order-sensitive hash over the tickers, dates and the bit patterns of
    /// every price.
    pub fn checksum(&self) -> u64 {
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        self.tickers.hash(&mut hasher);
        self.calendar.hash(&mut hasher);
        for m in [&self.opens, &self.highs, &self.lows, &self.closes] {
            for row in m {
                for p in row {
                    p.to_bits().hash(&mut hasher);
                }
            }
        }
        hasher.finish()
    }
}

/// Per-step price relatives, index 0 is cash and always 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeVector(pub Vec<f64>);

impl RelativeVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
