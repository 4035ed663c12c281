//! Trains a policy on a toy market where the first asset gains 1% every day
//! and the others never move, then prints how the allocation shifted.
//!
//! cargo run --release --example train_synthetic -- [steps]

use std::sync::Arc;
use std::time::Instant;

use eiie_pg::env::Environment;
use eiie_pg::normalization::NormalizationScheme;
use eiie_pg::policy::{PolicyConfig, PolicyParams};
use eiie_pg::synthetic::trending_frame;
use eiie_pg::trainer::{evaluate, Trainer, TrainerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let steps: u64 = std::env::args().nth(1).map_or(Ok(2000), |s| s.parse())?;
    let frame = Arc::new(trending_frame(3, 400, 1.01));
    let env = Environment::new(frame, 50, NormalizationScheme::LastClose, 100_000.0, 0.0025)?;

    let policy = PolicyParams::init(PolicyConfig::new(3, 50), 7)?;
    let before = evaluate(&policy, &env)?;
    let config = TrainerConfig { log_every: 250, ..TrainerConfig::default() };
    let mut trainer = Trainer::new(&env, policy, config, 7)?;

    let clock = Instant::now();
    trainer.train(steps, None)?;
    let elapsed = clock.elapsed();
    let after = evaluate(trainer.policy(), &env)?;

    for (step, loss) in &trainer.log().losses {
        println!("update {step:>6}  loss {loss:+.6}");
    }
    println!("{steps} updates in {:.1?} ({:.2} ms each)", elapsed, elapsed.as_secs_f64() * 1e3 / steps.max(1) as f64);
    println!("mean weight on the rising asset: {:.3} -> {:.3}", before.mean_weight(1), after.mean_weight(1));
    println!(
        "FAPV over the training episode: {:.3} -> {:.3}",
        before.final_value() / before.initial_value,
        after.final_value() / after.initial_value
    );
    Ok(())
}
