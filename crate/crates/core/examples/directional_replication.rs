//! Compares the three normalizations on the synthetic crypto-like portfolio:
//! train on 2018-2022, backtest 2023 with online learning, several seeds
//! per method. Full scale (5 seeds x 20000 updates) takes hours on one core.
//!
//! cargo run --release --example directional_replication -- [seeds] [steps] [online_steps]

use eiie_pg::experiment::{emit_report, render_table, run_campaign_on, CampaignData, ExperimentConfig};
use eiie_pg::market::DateRange;
use eiie_pg::normalization::NormalizationKind;
use eiie_pg::synthetic::SyntheticMarket;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seeds: usize = args.next().map_or(Ok(5), |s| s.parse())?;
    let steps: u64 = args.next().map_or(Ok(20_000), |s| s.parse())?;
    let online: u64 = args.next().map_or(Ok(30), |s| s.parse())?;

    let train: DateRange = "2018-01-01..2022-12-31".parse()?;
    let test: DateRange = "2023-01-01..2023-12-31".parse()?;
    let mut config = ExperimentConfig::new("synthetic", train, test);
    config.runs = seeds;
    config.trainer.steps = steps;
    config.trainer.online_steps = online;

    let frame = SyntheticMarket::crypto_like(0).frame()?;
    let data = CampaignData::from_frame(&config, &frame)?;
    let campaign = run_campaign_on(&config, &data)?;
    print!("{}", render_table(&campaign.report));

    let mean = |k| campaign.report.method(k).and_then(|m| m.summary.as_ref()).map(|s| s.fapv.mean);
    if let (Some(dm), Some(lc), Some(lp)) =
        (mean(NormalizationKind::DataMax), mean(NormalizationKind::LastClose), mean(NormalizationKind::LastPrice))
    {
        println!("data_max >= both state normalizations: {}", dm >= lc && dm >= lp);
    }
    let out = std::env::temp_dir().join("eiie-pg-replication");
    emit_report(&campaign, &out)?;
    println!("report in {}", out.display());
    Ok(())
}
