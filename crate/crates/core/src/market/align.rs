use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{AssetSeries, MarketError, MarketFrame, OhlcRow};

/// How to reconcile assets whose trading calendars differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentPolicy {
    /// Keep only the dates every asset traded on.
    Intersect,
    /// Use the union calendar and carry each asset's last bar forward.
    ForwardFill,
}

impl fmt::Display for AlignmentPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlignmentPolicy::Intersect => "intersect",
            AlignmentPolicy::ForwardFill => "forward_fill",
        })
    }
}

impl FromStr for AlignmentPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "intersect" => Ok(AlignmentPolicy::Intersect),
            "forward_fill" => Ok(AlignmentPolicy::ForwardFill),
            other => Err(format!("unknown alignment policy `{other}`")),
        }
    }
}

pub fn align_assets(series: &[AssetSeries], policy: AlignmentPolicy) -> Result<MarketFrame, MarketError> {
    if series.is_empty() {
        return Err(MarketError::NoSeries);
    }
    let tickers = series.iter().map(|s| s.ticker().to_string()).collect();
    match policy {
        AlignmentPolicy::Intersect => intersect(series, tickers),
        AlignmentPolicy::ForwardFill => forward_fill(series, tickers),
    }
}

fn intersect(series: &[AssetSeries], tickers: Vec<String>) -> Result<MarketFrame, MarketError> {
    let mut common: BTreeSet<NaiveDate> = series[0].rows().iter().map(|r| r.date).collect();
    for s in &series[1..] {
        let dates: BTreeSet<NaiveDate> = s.rows().iter().map(|r| r.date).collect();
        common.retain(|d| dates.contains(d));
    }
    if common.is_empty() {
        return Err(MarketError::EmptyIntersection);
    }
    let rows = series
        .iter()
        .map(|s| s.rows().iter().filter(|r| common.contains(&r.date)).copied().collect())
        .collect();
    Ok(MarketFrame::from_rows(tickers, common.into_iter().collect(), rows))
}

fn forward_fill(series: &[AssetSeries], tickers: Vec<String>) -> Result<MarketFrame, MarketError> {
    // every asset has a genuine row on or before the latest first date
    let start = series.iter().map(|s| s.rows()[0].date).max().ok_or(MarketError::NoCommonStart)?;
    let calendar: Vec<NaiveDate> = series
        .iter()
        .flat_map(|s| s.rows().iter().map(|r| r.date))
        .filter(|d| *d >= start)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if calendar.is_empty() {
        return Err(MarketError::NoCommonStart);
    }

    let rows = series
        .iter()
        .map(|s| {
            let src = s.rows();
            let mut next = 0;
            let mut last: Option<OhlcRow> = None;
            calendar
                .iter()
                .map(|&date| {
                    while next < src.len() && src[next].date <= date {
                        last = Some(src[next]);
                        next += 1;
                    }
                    let prior = last.expect("calendar starts after every first date");
                    OhlcRow { date, ..prior }
                })
                .collect()
        })
        .collect();
    Ok(MarketFrame::from_rows(tickers, calendar, rows))
}
