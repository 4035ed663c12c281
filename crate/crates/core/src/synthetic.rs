//! Seeded synthetic daily bars for examples and tests.
//!
//! Log closes follow either a random walk with drift or a mean-reverting
//! (Ornstein-Uhlenbeck) process around a fixed level. Opens equal the
//! previous close and highs/lows widen the open-close range by a random
//! intraday excursion, so every bar satisfies `low <= open, close <= high`.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::market::{AlignmentPolicy, AssetSeries, MarketError, MarketFrame, OhlcRow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dynamics {
    /// `ln P` gains `drift + vol * N(0, 1)` per day.
    RandomWalk { drift: f64, vol: f64 },
    /// `ln P` moves `speed * (ln level - ln P) + vol * N(0, 1)` per day.
    MeanReverting { level: f64, speed: f64, vol: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssetSpec {
    pub ticker: String,
    pub start_price: f64,
    pub dynamics: Dynamics,
}

/// Which days carry a bar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Calendar {
    EveryDay,
    Weekdays,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    pub assets: Vec<AssetSpec>,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub calendar: Calendar,
    pub seed: u64,
}

impl SyntheticMarket {
    /// Nine coins traded every day from 2016-01-01 to 2023-12-31: a mix of
    /// trending and range-bound assets with crypto-like volatility.
    pub fn crypto_like(seed: u64) -> Self {
        let spec = |ticker: &str, start_price: f64, dynamics| AssetSpec { ticker: ticker.into(), start_price, dynamics };
        use Dynamics::*;
        SyntheticMarket {
            assets: vec![
                spec("ADA", 0.05, RandomWalk { drift: 0.0012, vol: 0.055 }),
                spec("BNB", 2.0, RandomWalk { drift: 0.0018, vol: 0.050 }),
                spec("BTC", 400.0, RandomWalk { drift: 0.0010, vol: 0.038 }),
                spec("BTG", 30.0, MeanReverting { level: 25.0, speed: 0.01, vol: 0.060 }),
                spec("DOGE", 0.002, RandomWalk { drift: 0.0011, vol: 0.065 }),
                spec("ETH", 1.0, RandomWalk { drift: 0.0016, vol: 0.050 }),
                spec("LINK", 0.2, MeanReverting { level: 8.0, speed: 0.004, vol: 0.055 }),
                spec("TRX", 0.01, MeanReverting { level: 0.05, speed: 0.006, vol: 0.055 }),
                spec("XRP", 0.006, MeanReverting { level: 0.4, speed: 0.005, vol: 0.050 }),
            ],
            start: NaiveDate::from_ymd_opt(2016, 1, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(2023, 12, 31).unwrap(),
            calendar: Calendar::EveryDay,
            seed,
        }
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.start
            .iter_days()
            .take_while(|d| *d <= self.end)
            .filter(|d| self.calendar == Calendar::EveryDay || !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
            .collect()
    }

    pub fn generate(&self) -> Vec<AssetSeries> {
        let dates = self.dates();
        let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
        self.assets
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(i as u64);
                let mut log_p = spec.start_price.ln();
                let mut rows = Vec::with_capacity(dates.len());
                for &date in &dates {
                    let open = log_p.exp();
                    let shock: f64 = std_normal.sample(&mut rng);
                    let (step, vol) = match spec.dynamics {
                        Dynamics::RandomWalk { drift, vol } => (drift + vol * shock, vol),
                        Dynamics::MeanReverting { level, speed, vol } => {
                            (speed * (level.ln() - log_p) + vol * shock, vol)
                        }
                    };
                    log_p += step;
                    let close = log_p.exp();
                    let up: f64 = std_normal.sample(&mut rng);
                    let down: f64 = std_normal.sample(&mut rng);
                    let high = open.max(close) * (0.5 * vol * up.abs()).exp();
                    let low = open.min(close) * (-0.5 * vol * down.abs()).exp();
                    rows.push(OhlcRow { date, open, high, low, close });
                }
                AssetSeries::new(spec.ticker.clone(), rows).expect("generated bars are consistent")
            })
            .collect()
    }

    pub fn frame(&self) -> Result<MarketFrame, MarketError> {
        crate::market::align_assets(&self.generate(), AlignmentPolicy::Intersect)
    }

    /// Writes one `<ticker>.csv` per asset plus `manifest.txt` into `dir`,
    /// returning the manifest path.
    pub fn write_csv_dir(&self, dir: impl AsRef<Path>) -> std::io::Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let policy = match self.calendar {
            Calendar::EveryDay => AlignmentPolicy::ForwardFill,
            Calendar::Weekdays => AlignmentPolicy::Intersect,
        };
        let mut manifest = format!("alignment = {policy}\n");
        for series in self.generate() {
            let file = format!("{}.csv", series.ticker());
            write_series_csv(&series, dir.join(&file))?;
            manifest.push_str(&format!("{} = {file}\n", series.ticker()));
        }
        let path = dir.join("manifest.txt");
        std::fs::write(&path, manifest)?;
        Ok(path)
    }
}

pub fn write_series_csv(series: &AssetSeries, path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "date,open,high,low,close")?;
    for r in series.rows() {
        writeln!(out, "{},{},{},{},{}", r.date, r.open, r.high, r.low, r.close)?;
    }
    out.flush()
}

/// `n_assets` assets over `len` consecutive days: asset 1 closes
/// `growth` times higher every day, the others stay flat. Highs and lows sit
/// 0.5% around the close.
pub fn trending_frame(n_assets: usize, len: usize, growth: f64) -> MarketFrame {
    let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let calendar: Vec<NaiveDate> = (0..len).map(|k| d0 + chrono::Days::new(k as u64)).collect();
    let closes: Vec<Vec<f64>> = (0..n_assets)
        .map(|i| {
            let base = 10.0 * (i + 1) as f64;
            if i == 0 {
                (0..len).map(|k| base * growth.powi(k as i32)).collect()
            } else {
                vec![base; len]
            }
        })
        .collect();
    let highs = closes.iter().map(|r| r.iter().map(|c| c * 1.005).collect()).collect();
    let lows = closes.iter().map(|r| r.iter().map(|c| c * 0.995).collect()).collect();
    let tickers = (1..=n_assets).map(|i| format!("S{i}")).collect();
    MarketFrame::from_matrices(tickers, calendar, closes.clone(), highs, lows, closes)
}
