//! Builds the state of one decision step under each normalization and prints
//! the last few columns of the first asset.

use eiie_pg::env::build_state;
use eiie_pg::normalization::{apply_data_max, fit_data_max, NormalizationScheme};
use eiie_pg::synthetic::SyntheticMarket;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frame = SyntheticMarket::crypto_like(2).frame()?;
    let train = frame.slice(0..1500);
    let window = 50;
    let step = 1200;

    let data_max = fit_data_max(&train)?;
    if let NormalizationScheme::DataMax { tickers, scales } = &data_max {
        for (t, s) in tickers.iter().zip(scales) {
            println!("{t:>5} max high {s:.4}");
        }
    }
    let scaled = apply_data_max(&data_max, &frame)?;

    let cases = [
        ("last_close", NormalizationScheme::LastClose, &frame),
        ("last_price", NormalizationScheme::LastPrice, &frame),
        ("data_max", data_max.clone(), &scaled),
    ];
    for (name, scheme, source) in cases {
        let state = build_state(source, step, window, &scheme)?;
        println!("{name}:");
        for (f, label) in ["close", "high", "low"].iter().enumerate() {
            let tail: Vec<String> = (window - 4..window).map(|j| format!("{:.4}", state.get(f, 0, j))).collect();
            println!("  {label:>5} ... {}", tail.join(" "));
        }
    }
    Ok(())
}
