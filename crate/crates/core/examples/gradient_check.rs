//! Checks the analytic gradient of the batch objective against central
//! finite differences for every parameter of a small policy.
//!
//! cargo run --release --example gradient_check -- [seed]

use std::sync::Arc;

use eiie_pg::autodiff::Tape;
use eiie_pg::env::Environment;
use eiie_pg::normalization::NormalizationScheme;
use eiie_pg::policy::{PolicyConfig, PolicyParams, BLOCKS};
use eiie_pg::synthetic::SyntheticMarket;
use eiie_pg::trainer::{batch_objective, batch_objective_fixed_mu, fill_buffer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map_or(Ok(3), |s| s.parse())?;
    let commission = 0.0025;
    let mut market = SyntheticMarket::crypto_like(seed);
    market.assets.truncate(3);
    let frame = Arc::new(market.frame()?.slice(0..40));
    let env = Environment::new(frame, 8, NormalizationScheme::LastClose, 1.0, commission)?;
    let mut policy = PolicyParams::init(PolicyConfig::new(3, 8), seed)?;
    // Zero biases put relu inputs exactly on the kink when a layer is dead,
    // where finite differences see a slope of 1/2. Random biases avoid that.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (i, block) in policy.blocks_mut().into_iter().enumerate() {
        if !PolicyParams::is_kernel(i) {
            block.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        }
    }
    let buffer = fill_buffer(&env, &policy)?;
    let range = 10..14;

    let mut tape = Tape::new();
    let vars = policy.attach(&mut tape, true);
    let out = batch_objective(&mut tape, &policy, &vars, &buffer, range.clone(), commission)?;
    tape.backward(out.objective)?;

    let objective_at = |p: &PolicyParams| -> f64 {
        let mut t = Tape::new();
        let v = p.attach(&mut t, false);
        let o = batch_objective_fixed_mu(&mut t, p, &v, &buffer, range.clone(), &out.log_mu).expect("objective");
        t.value(o.objective).item()
    };

    let eps = 1e-5;
    let mut worst = 0.0f64;
    for b in 0..BLOCKS {
        let analytic = tape.grad(vars.vars[b]).expect("every block gets a gradient");
        let (name, block) = policy.blocks()[b];
        let mut block_worst = 0.0f64;
        for i in 0..block.len() {
            let mut plus = policy.clone();
            plus.blocks_mut()[b].data_mut()[i] += eps;
            let mut minus = policy.clone();
            minus.blocks_mut()[b].data_mut()[i] -= eps;
            let numeric = (objective_at(&plus) - objective_at(&minus)) / (2.0 * eps);
            let a = analytic.data()[i];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            block_worst = block_worst.max(err);
        }
        let norm = analytic.data().iter().map(|g| g * g).sum::<f64>().sqrt();
        println!("{name:>14}: {:>5} entries, gradient norm {norm:.3e}, max relative error {block_worst:.2e}", block.len());
        worst = worst.max(block_worst);
    }
    println!("overall max relative error {worst:.2e}");
    Ok(())
}
