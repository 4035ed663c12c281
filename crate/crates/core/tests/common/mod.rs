//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use chrono::NaiveDate;
use eiie_pg::autodiff::Tape;
use eiie_pg::env::{Environment, WeightVector};
use eiie_pg::market::MarketFrame;
use eiie_pg::normalization::NormalizationScheme;
use eiie_pg::policy::{PolicyParams, BLOCKS};
use eiie_pg::trainer::{batch_objective, batch_objective_fixed_mu, ReplayBuffer};
use rand::Rng;

/// Root of `mu = (1 - c w'_0 - (2c - c^2) sum_i (w'_i - mu w_i)^+) / (1 - c w_0)`
/// by plain bisection on `g(mu) = rhs(mu) - mu`, which is decreasing.
pub fn mu_bisection(w_from: &[f64], w_to: &[f64], c: f64) -> f64 {
    let rhs = |mu: f64| {
        let sell: f64 = w_from[1..].iter().zip(&w_to[1..]).map(|(f, t)| (f - mu * t).max(0.0)).sum();
        (1.0 - c * w_from[0] - (2.0 * c - c * c) * sell) / (1.0 - c * w_to[0])
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rhs(mid) - mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Uniform point of the simplex, with a chance of exact zeros.
pub fn random_simplex<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    let sparse = rng.random_bool(0.25);
    let raw: Vec<f64> = (0..len)
        .map(|_| if sparse && rng.random_bool(0.4) { 0.0 } else { -rng.random_range(f64::EPSILON..1.0f64).ln() })
        .collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        let mut w = vec![0.0; len];
        w[rng.random_range(0..len)] = 1.0;
        return w;
    }
    raw.iter().map(|v| v / total).collect()
}

pub fn day(k: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(k as u64)
}

/// Random walk closes with highs/lows bracketing them.
pub fn random_frame<R: Rng>(n_assets: usize, len: usize, vol: f64, rng: &mut R) -> MarketFrame {
    let mut closes = Vec::new();
    let mut highs = Vec::new();
    let mut lows = Vec::new();
    for _ in 0..n_assets {
        let mut p = rng.random_range(0.5..200.0);
        let mut c = Vec::with_capacity(len);
        let mut h = Vec::with_capacity(len);
        let mut l = Vec::with_capacity(len);
        for _ in 0..len {
            p *= (vol * rng.random_range(-1.0..1.0f64)).exp();
            c.push(p);
            h.push(p * (1.0 + rng.random_range(0.0..vol)));
            l.push(p * (1.0 - rng.random_range(0.0..vol.min(0.5))));
        }
        closes.push(c);
        highs.push(h);
        lows.push(l);
    }
    let tickers = (0..n_assets).map(|i| format!("A{i}")).collect();
    MarketFrame::from_matrices(tickers, (0..len).map(day).collect(), closes.clone(), highs, lows, closes)
}

pub fn env_on(frame: MarketFrame, window: usize, commission: f64) -> Environment {
    Environment::new(Arc::new(frame), window, NormalizationScheme::LastClose, 1.0, commission).unwrap()
}

/// O(L^2) maximum drawdown: max over `t < tau` of `(V_t - V_tau) / V_t`.
pub fn mdd_brute(values: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for t in 0..values.len() {
        for tau in t + 1..values.len() {
            worst = worst.max((values[t] - values[tau]) / values[t]);
        }
    }
    worst
}

/// Two-pass Sharpe ratio of `V_t / V_(t-1) - rho_f` with a population std.
pub fn sharpe_reference(values: &[f64], rho_f: f64) -> f64 {
    let r: Vec<f64> = (1..values.len()).map(|t| values[t] / values[t - 1] - rho_f).collect();
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    let var = r.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    mean / var.sqrt()
}

/// Batch-start probabilities for a buffer of `len` and batches of `batch`:
/// geometric distance from the latest start, redrawn up to `redraws` times
/// when out of range and then clamped to start 0.
pub fn batch_start_pmf(len: usize, batch: usize, bias: f64, redraws: i32) -> Vec<f64> {
    let latest = len - batch;
    let p_out = (1.0 - bias).powi(latest as i32 + 1);
    let accept = (1.0 - p_out.powi(redraws)) / (1.0 - p_out);
    let mut pmf = vec![0.0; latest + 1];
    for k in 0..=latest {
        pmf[latest - k] = bias * (1.0 - bias).powi(k as i32) * accept;
    }
    pmf[0] += p_out.powi(redraws);
    pmf
}

/// Value path of a portfolio rebalanced to `target` at every step.
pub fn constant_rebalanced(env: &Environment, target: &WeightVector) -> Vec<f64> {
    let (mut state, _) = env.reset();
    let mut values = vec![env.initial_value()];
    while !state.done {
        let out = env.step(&state, target).unwrap();
        values.push(out.state.drifted_value);
        state = out.state;
    }
    values
}

/// Maximum relative error between the analytic gradient of the batch
/// objective and central differences of the same objective with `mu` held at
/// its unperturbed values. Also returns how many blocks had a non-zero gradient.
pub fn objective_gradient_error(
    policy: &PolicyParams,
    buffer: &ReplayBuffer,
    range: std::ops::Range<usize>,
    commission: f64,
    eps: f64,
) -> (f64, usize) {
    let mut tape = Tape::new();
    let vars = policy.attach(&mut tape, true);
    let out = batch_objective(&mut tape, policy, &vars, buffer, range.clone(), commission).unwrap();
    tape.backward(out.objective).unwrap();

    let value_at = |p: &PolicyParams| {
        let mut t = Tape::new();
        let v = p.attach(&mut t, false);
        let o = batch_objective_fixed_mu(&mut t, p, &v, buffer, range.clone(), &out.log_mu).unwrap();
        t.value(o.objective).item()
    };
    let mut worst = 0.0f64;
    let mut live = 0;
    for b in 0..BLOCKS {
        let analytic = tape.grad(vars.vars[b]).unwrap();
        if analytic.data().iter().any(|g| *g != 0.0) {
            live += 1;
        }
        for i in 0..analytic.len() {
            let mut plus = policy.clone();
            plus.blocks_mut()[b].data_mut()[i] += eps;
            let mut minus = policy.clone();
            minus.blocks_mut()[b].data_mut()[i] -= eps;
            let numeric = (value_at(&plus) - value_at(&minus)) / (2.0 * eps);
            let a = analytic.data()[i];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-7));
        }
    }
    (worst, live)
}

/// Replaces every bias with a uniform draw from `[-0.5, 0.5)` so no relu
/// input sits exactly on its kink.
pub fn randomize_biases<R: Rng>(policy: &mut PolicyParams, rng: &mut R) {
    for (i, block) in policy.blocks_mut().into_iter().enumerate() {
        if !PolicyParams::is_kernel(i) {
            block.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        }
    }
}
