//! Runs a tiny seeded campaign end to end and writes its report, the same
//! pipeline the `eiie-pg run` command drives from a config file.
//!
//! cargo run --release --example campaign -- [out_dir]

use eiie_pg::experiment::{emit_report, render_table, run_campaign, validate, ExperimentConfig};
use eiie_pg::synthetic::SyntheticMarket;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("eiie-pg-campaign"), Into::into);
    let manifest = SyntheticMarket::crypto_like(0).write_csv_dir(out.join("data"))?;

    let text = format!(
        "manifest = {}\n\
         train_range = 2022-01-01..2022-12-31\n\
         test_range = 2023-01-01..2023-03-31\n\
         normalization = last_close, data_max\n\
         steps = 100\n\
         online_steps = 1\n\
         batch_size = 50\n\
         runs = 2\n\
         base_seed = 10\n\
         workers = 2\n",
        manifest.display()
    );
    let config = ExperimentConfig::parse(&text, &out)?;
    let summary = validate(&config)?;
    println!("{} train decisions, {} test decisions", summary.train_decisions, summary.test_decisions);

    let campaign = run_campaign(&config)?;
    emit_report(&campaign, out.join("report"))?;
    print!("{}", render_table(&campaign.report));
    println!("report in {}", out.join("report").display());
    Ok(())
}
