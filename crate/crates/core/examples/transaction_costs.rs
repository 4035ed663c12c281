//! Compares the fixed-point transaction factor with the bisection oracle on
//! a few rebalances.

use eiie_pg::env::{transaction_factor, transaction_factor_oracle};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = 0.0025;
    let cases: [(&str, [f64; 3], [f64; 3]); 4] = [
        ("hold", [0.2, 0.3, 0.5], [0.2, 0.3, 0.5]),
        ("liquidate", [0.0, 0.4, 0.6], [1.0, 0.0, 0.0]),
        ("buy in", [1.0, 0.0, 0.0], [0.0, 0.5, 0.5]),
        ("rotate", [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]),
    ];
    for (name, from, to) in cases {
        let mu = transaction_factor(&from, &to, c)?;
        let oracle = transaction_factor_oracle(&from, &to, c)?;
        println!("{name:>10}: mu = {mu:.12}  oracle = {oracle:.12}  cost = {:.4}%", (1.0 - mu) * 100.0);
    }
    Ok(())
}
