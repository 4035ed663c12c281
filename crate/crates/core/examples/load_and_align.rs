//! Writes a synthetic portfolio to CSV, reads it back through a manifest and
//! splits it into training and test periods.

use eiie_pg::market::{split_periods, AlignmentPolicy, DateRange, PortfolioManifest};
use eiie_pg::synthetic::{Calendar, SyntheticMarket};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("eiie-pg-load-and-align");
    let market = SyntheticMarket { calendar: Calendar::Weekdays, ..SyntheticMarket::crypto_like(1) };
    let manifest_path = market.write_csv_dir(&dir)?;
    println!("wrote {}", manifest_path.display());

    let mut manifest = PortfolioManifest::load(&manifest_path)?;
    manifest.alignment = AlignmentPolicy::Intersect;
    let frame = manifest.load_frame()?;
    println!(
        "{} assets, {} rows from {} to {}",
        frame.n_assets(),
        frame.len(),
        frame.calendar()[0],
        frame.calendar()[frame.len() - 1]
    );

    let y = frame.price_relatives(1)?;
    println!("first price relatives: {:?}", y.as_slice());

    let split = split_periods(&frame, "2018-01-01..2022-12-31".parse::<DateRange>()?, "2023-01-01..2023-12-31".parse()?, 50)?;
    println!(
        "train rows {}, test rows {} (first genuine test row at index {}: {})",
        split.train.len(),
        split.test.len(),
        split.boundary,
        split.test.calendar()[split.boundary]
    );
    Ok(())
}
