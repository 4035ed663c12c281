//! Trains briefly on synthetic crypto-like data and backtests the following
//! year, with and without online updates after each rebalance.
//!
//! cargo run --release --example backtest_online -- [train_steps] [online_steps]

use std::sync::Arc;

use eiie_pg::env::Environment;
use eiie_pg::market::{split_periods, DateRange};
use eiie_pg::metrics::MetricReport;
use eiie_pg::normalization::fit_data_max;
use eiie_pg::policy::{PolicyConfig, PolicyParams};
use eiie_pg::synthetic::SyntheticMarket;
use eiie_pg::trainer::{Trainer, TrainerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let steps: u64 = args.next().map_or(Ok(300), |s| s.parse())?;
    let online: u64 = args.next().map_or(Ok(2), |s| s.parse())?;

    let frame = SyntheticMarket::crypto_like(3).frame()?;
    let train: DateRange = "2021-01-01..2022-12-31".parse()?;
    let test: DateRange = "2023-01-01..2023-06-30".parse()?;
    let split = split_periods(&frame, train, test, 50)?;
    let scheme = fit_data_max(&split.train)?;
    let train_env = Environment::new(Arc::new(split.train), 50, scheme.clone(), 100_000.0, 0.0025)?;
    let test_env = Environment::new(Arc::new(split.test), 50, scheme, 100_000.0, 0.0025)?;

    let policy = PolicyParams::init(PolicyConfig::new(frame.n_assets(), 50), 3)?;
    let config = TrainerConfig { steps, online_steps: online, ..TrainerConfig::default() };
    let mut trainer = Trainer::new(&train_env, policy, config, 3)?;
    trainer.train(steps, None)?;
    println!("trained {steps} updates on {} experiences", trainer.buffer().len());

    let frozen = trainer.clone().backtest(&test_env, 0)?;
    let online_traj = trainer.backtest(&test_env, online)?;
    for (label, traj) in [("frozen", &frozen), ("online", &online_traj)] {
        let m = MetricReport::from_trajectory(traj)?;
        println!(
            "{label:>6}: {} steps  FAPV {:.4}  MDD {:.4}  SR(excess) {}",
            m.n_steps,
            m.fapv,
            m.mdd,
            m.sharpe_excess.map_or("n/a".into(), |s| format!("{s:.4}"))
        );
    }
    println!("buffer grew to {} experiences", trainer.buffer().len());
    Ok(())
}
