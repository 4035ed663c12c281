//! Backtest performance metrics over a value path `[V_0, V_1^f, ..., V_T^f]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trainer::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("trajectory has no steps")]
    EmptyTrajectory,
    #[error("need at least 2 steps, got {0}")]
    TooShort(usize),
    #[error("returns have zero variance")]
    ZeroVariance,
    #[error("initial value must be positive, got {0}")]
    NonPositiveInitial(f64),
}

/// Final accumulated portfolio value: `V_T^f / V_0`.
pub fn fapv(traj: &Trajectory, initial_value: f64) -> Result<f64, MetricsError> {
    if traj.is_empty() {
        return Err(MetricsError::EmptyTrajectory);
    }
    if !(initial_value > 0.0) {
        return Err(MetricsError::NonPositiveInitial(initial_value));
    }
    Ok(traj.final_value() / initial_value)
}

/// Largest relative peak-to-trough loss of a trajectory.
pub fn mdd(traj: &Trajectory) -> Result<f64, MetricsError> {
    if traj.is_empty() {
        return Err(MetricsError::EmptyTrajectory);
    }
    Ok(max_drawdown(&traj.values()))
}

/// Running-peak drawdown over a value path; 0 when values never fall.
pub fn max_drawdown(values: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for &v in values {
        peak = peak.max(v);
        worst = worst.max((peak - v) / peak);
    }
    worst
}

/// `mean(rho_t - rho_f) / std(rho_t - rho_f)` with `rho_t = V_t / V_{t-1}`
/// and the population (1/N) standard deviation.
pub fn sharpe(traj: &Trajectory, rho_f: f64) -> Result<f64, MetricsError> {
    if traj.len() < 2 {
        return Err(MetricsError::TooShort(traj.len()));
    }
    sharpe_of_values(&traj.values(), rho_f)
}

pub fn sharpe_of_values(values: &[f64], rho_f: f64) -> Result<f64, MetricsError> {
    if values.len() < 3 {
        return Err(MetricsError::TooShort(values.len().saturating_sub(1)));
    }
    let excess: Vec<f64> = values.windows(2).map(|w| w[1] / w[0] - rho_f).collect();
    let n = excess.len() as f64;
    let mean = excess.iter().sum::<f64>() / n;
    let var = excess.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = (mean + rho_f).abs().max(1.0);
    if std <= 1e-12 * scale {
        return Err(MetricsError::ZeroVariance);
    }
    Ok(mean / std)
}

/// Metrics of one backtest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub fapv: f64,
    pub mdd: f64,
    /// Sharpe ratio with a zero risk-free return ratio, as literally defined.
    pub sharpe: Option<f64>,
    /// Sharpe ratio of per-step excess returns `rho_t - 1`.
    pub sharpe_excess: Option<f64>,
    pub n_steps: usize,
}

impl MetricReport {
    /// Sharpe fields are `None` when undefined (too short, or constant returns).
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self, MetricsError> {
        Ok(MetricReport {
            fapv: fapv(traj, traj.initial_value)?,
            mdd: mdd(traj)?,
            sharpe: sharpe(traj, 0.0).ok(),
            sharpe_excess: sharpe(traj, 1.0).ok(),
            n_steps: traj.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::WeightVector;
    use crate::trainer::TrajectoryPoint;
    use chrono::NaiveDate;

    fn traj(values: &[f64]) -> Trajectory {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        Trajectory {
            initial_value: values[0],
            points: values
                .windows(2)
                .enumerate()
                .map(|(k, w)| TrajectoryPoint {
                    step: k,
                    date: d0 + chrono::Days::new(k as u64 + 1),
                    value: w[1],
                    action: WeightVector::cash(1),
                    reward: (w[1] / w[0]).ln(),
                })
                .collect(),
        }
    }

    #[test]
    fn fapv_examples() {
        assert_eq!(fapv(&traj(&[5.0, 7.0, 5.0]), 5.0).unwrap(), 1.0);
        assert!((fapv(&traj(&[100000.0, 178000.0]), 100000.0).unwrap() - 1.78).abs() < 1e-15);
        assert!((fapv(&traj(&[100000.0, 76000.0]), 100000.0).unwrap() - 0.76).abs() < 1e-15);
        assert_eq!(fapv(&Trajectory::new(1.0), 1.0), Err(MetricsError::EmptyTrajectory));
    }

    #[test]
    fn mdd_examples() {
        assert_eq!(mdd(&traj(&[1.0, 2.0, 2.0, 3.0])).unwrap(), 0.0);
        assert_eq!(mdd(&traj(&[100.0, 120.0, 90.0, 110.0])).unwrap(), 0.25);
        assert_eq!(mdd(&traj(&[100.0, 50.0, 200.0, 100.0])).unwrap(), 0.5);
    }

    #[test]
    fn sharpe_hand_example() {
        let sr = sharpe(&traj(&[100.0, 110.0, 99.0, 108.9]), 0.0).unwrap();
        // mean 31/30, population std sqrt(2/225)
        let expected = (31.0 / 30.0) / (2.0f64 / 225.0).sqrt();
        assert!((sr - expected).abs() < 1e-9, "{sr}");
        assert!((sr - 10.960_155).abs() < 1e-5);
    }

    #[test]
    fn sharpe_degenerate_cases() {
        let growth: Vec<f64> = (0..10).map(|k| 2f64.powi(k)).collect();
        assert_eq!(sharpe(&traj(&growth), 0.0), Err(MetricsError::ZeroVariance));
        assert_eq!(sharpe(&traj(&[1.0, 2.0]), 0.0), Err(MetricsError::TooShort(1)));
    }

    #[test]
    fn sharpe_sign_flips_with_excess_returns() {
        // excess returns r = rho - 1 of [+0.1, -0.05, +0.02] and their negation
        let up = traj(&[1.0, 1.1, 1.1 * 0.95, 1.1 * 0.95 * 1.02]);
        let down = traj(&[1.0, 0.9, 0.9 * 1.05, 0.9 * 1.05 * 0.98]);
        let (a, b) = (sharpe(&up, 1.0).unwrap(), sharpe(&down, 1.0).unwrap());
        assert!((a + b).abs() < 1e-12, "{a} {b}");
    }

    #[test]
    fn report_tolerates_undefined_sharpe() {
        let r = MetricReport::from_trajectory(&traj(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(r.sharpe, None);
        assert_eq!(r.fapv, 1.0);
        assert_eq!(r.n_steps, 2);
    }
}
