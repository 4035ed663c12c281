use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{MarketError, MarketFrame};

/// Inclusive calendar interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        DateRange { start, end }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

impl fmt::Display for DateRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl FromStr for DateRange {
    type Err = String;

    /// Parses `YYYY-MM-DD..YYYY-MM-DD`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.trim().split_once("..").ok_or_else(|| format!("expected START..END, got `{s}`"))?;
        let parse = |x: &str| NaiveDate::parse_from_str(x.trim(), "%Y-%m-%d").map_err(|e| format!("`{x}`: {e}"));
        let range = DateRange::new(parse(a)?, parse(b)?);
        if range.start > range.end {
            return Err(format!("range `{s}` ends before it starts"));
        }
        Ok(range)
    }
}

/// Train and test frames cut from one aligned frame.
///
/// The test frame starts with the last `window - 1` training rows so that
/// the first test decision has a full observation window; `boundary` is the
/// index of the first genuine test row inside `test`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSplit {
    pub train: MarketFrame,
    pub test: MarketFrame,
    pub train_range: DateRange,
    pub test_range: DateRange,
    pub boundary: usize,
}

pub fn split_periods(
    frame: &MarketFrame,
    train_range: DateRange,
    test_range: DateRange,
    time_window: usize,
) -> Result<PeriodSplit, MarketError> {
    if train_range.end >= test_range.start {
        return Err(MarketError::RangesOverlap { train: train_range, test: test_range });
    }
    let indices = |range: DateRange| -> Result<(usize, usize), MarketError> {
        let cal = frame.calendar();
        let first = cal.partition_point(|d| *d < range.start);
        let last = cal.partition_point(|d| *d <= range.end);
        if first >= last {
            return Err(MarketError::EmptyRange(range));
        }
        Ok((first, last))
    };
    let (train_lo, train_hi) = indices(train_range)?;
    let (test_lo, test_hi) = indices(test_range)?;

    let train_rows = train_hi - train_lo;
    let needed = time_window + 1;
    if train_rows < needed {
        return Err(MarketError::InsufficientTrainLength { rows: train_rows, needed });
    }

    let prefix = time_window.saturating_sub(1);
    let train = frame.slice(train_lo..train_hi);
    let test = if test_lo == train_hi {
        frame.slice(test_lo - prefix..test_hi)
    } else {
        // calendar rows between the two ranges are excluded from both
        let head = frame.slice(train_hi - prefix..train_hi);
        concat(&head, &frame.slice(test_lo..test_hi))
    };
    let cal = frame.calendar();
    Ok(PeriodSplit {
        train,
        test,
        train_range: DateRange::new(cal[train_lo], cal[train_hi - 1]),
        test_range: DateRange::new(cal[test_lo], cal[test_hi - 1]),
        boundary: prefix,
    })
}

/// Joins two frames over the same tickers along time.
pub(crate) fn concat(a: &MarketFrame, b: &MarketFrame) -> MarketFrame {
    assert_eq!(a.tickers(), b.tickers());
    let join = |x: &[Vec<f64>], y: &[Vec<f64>]| -> Vec<Vec<f64>> {
        x.iter().zip(y).map(|(p, q)| p.iter().chain(q).copied().collect()).collect()
    };
    MarketFrame::from_matrices(
        a.tickers().to_vec(),
        a.calendar().iter().chain(b.calendar()).copied().collect(),
        join(a.opens(), b.opens()),
        join(a.highs(), b.highs()),
        join(a.lows(), b.lows()),
        join(a.closes(), b.closes()),
    )
}
