//! Evaluates an untrained policy on synthetic data and reports its metrics
//! next to those of an equal-weight hold.

use std::sync::Arc;

use eiie_pg::env::{Environment, WeightVector};
use eiie_pg::metrics::{max_drawdown, sharpe_of_values, MetricReport};
use eiie_pg::normalization::NormalizationScheme;
use eiie_pg::policy::{PolicyConfig, PolicyParams};
use eiie_pg::synthetic::SyntheticMarket;
use eiie_pg::trainer::evaluate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frame = Arc::new(SyntheticMarket::crypto_like(5).frame()?.slice(2000..2400));
    let n = frame.n_assets();
    let env = Environment::new(Arc::clone(&frame), 50, NormalizationScheme::LastClose, 100_000.0, 0.0025)?;

    let policy = PolicyParams::init(PolicyConfig::new(n, 50), 0)?;
    let traj = evaluate(&policy, &env)?;
    let report = MetricReport::from_trajectory(&traj)?;
    println!("untrained EIIE over {} steps", report.n_steps);
    println!("  FAPV {:.4}  MDD {:.4}", report.fapv, report.mdd);
    println!("  SR (rho_f = 0) {:?}  SR (excess) {:?}", report.sharpe, report.sharpe_excess);

    // Buy an equal-weight portfolio once and let it drift.
    let (mut state, _) = env.reset();
    let mut target = WeightVector::uniform(n);
    let mut values = vec![env.initial_value()];
    while !state.done {
        let out = env.step(&state, &target)?;
        values.push(out.state.drifted_value);
        target = out.state.drifted.clone();
        state = out.state;
    }
    println!("equal-weight buy and hold");
    println!("  FAPV {:.4}  MDD {:.4}", values[values.len() - 1] / values[0], max_drawdown(&values));
    println!("  SR (excess) {:?}", sharpe_of_values(&values, 1.0).ok());
    Ok(())
}
