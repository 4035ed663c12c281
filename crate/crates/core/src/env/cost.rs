//! Transaction-cost shrinkage factor for a rebalance.
//!
//! Moving from weights `w'` (after drift) to target weights `w` at
//! commission rate `c` on both purchases and sales leaves a fraction `mu` of
//! the portfolio value, where `mu` solves
//!
//! ```text
//! mu = (1 - c w'_0 - (2c - c^2) * sum_{i>=1} max(w'_i - mu w_i, 0)) / (1 - c w_0)
//! ```
//!
//! [`transaction_factor`] iterates this map; [`transaction_factor_oracle`]
//! bisects the equivalent root problem and exists to cross-check it.

use super::EnvError;

const FIXED_POINT_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 10_000;
const BISECTION_TOL: f64 = 1e-14;

fn rhs(w_from: &[f64], w_to: &[f64], c: f64, mu: f64) -> f64 {
    let sold: f64 = w_from[1..].iter().zip(&w_to[1..]).map(|(a, b)| (a - mu * b).max(0.0)).sum();
    (1.0 - c * w_from[0] - (2.0 * c - c * c) * sold) / (1.0 - c * w_to[0])
}

/// Fixed-point iteration for the rebalancing factor, starting from
/// `1 - c * sum_{i>=1} |w'_i - w_i|`.
pub fn transaction_factor(w_from: &[f64], w_to: &[f64], c: f64) -> Result<f64, EnvError> {
    debug_assert_eq!(w_from.len(), w_to.len());
    let turnover: f64 = w_from[1..].iter().zip(&w_to[1..]).map(|(a, b)| (a - b).abs()).sum();
    let mut mu = 1.0 - c * turnover;
    for _ in 0..MAX_ITERATIONS {
        let next = rhs(w_from, w_to, c, mu);
        if (next - mu).abs() < FIXED_POINT_TOL {
            return Ok(next);
        }
        mu = next;
    }
    Err(EnvError::NoConvergence { last: mu })
}

/// Bisection on `g(mu) = mu (1 - c w_0) - numerator(mu)`, which is
/// increasing in `mu`. Brackets `[1 - 2c, 1]` first and `[0, 1]` on failure.
pub fn transaction_factor_oracle(w_from: &[f64], w_to: &[f64], c: f64) -> Result<f64, EnvError> {
    let g = |mu: f64| {
        let sold: f64 = w_from[1..].iter().zip(&w_to[1..]).map(|(a, b)| (a - mu * b).max(0.0)).sum();
        mu * (1.0 - c * w_to[0]) - (1.0 - c * w_from[0] - (2.0 * c - c * c) * sold)
    };
    for (lo, hi) in [((1.0 - 2.0 * c).max(0.0), 1.0), (0.0, 1.0)] {
        let (mut lo, mut hi) = (lo, hi);
        let (g_lo, g_hi) = (g(lo), g(hi));
        if g_lo == 0.0 {
            return Ok(lo);
        }
        if g_hi == 0.0 {
            return Ok(hi);
        }
        if g_lo > 0.0 || g_hi < 0.0 {
            continue;
        }
        while hi - lo > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(0.5 * (lo + hi));
    }
    Err(EnvError::BracketFailure)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_rebalance_costs_nothing() {
        let w = [0.2, 0.5, 0.3];
        assert_eq!(transaction_factor(&w, &w, 0.0025).unwrap(), 1.0);
        assert_eq!(transaction_factor_oracle(&w, &w, 0.0025).unwrap(), 1.0);
    }

    #[test]
    fn full_liquidation_costs_one_commission() {
        let c = 0.0025;
        let mu = transaction_factor(&[0.0, 1.0], &[1.0, 0.0], c).unwrap();
        assert!((mu - (1.0 - c)).abs() < 1e-12, "{mu}");
        let oracle = transaction_factor_oracle(&[0.0, 1.0], &[1.0, 0.0], c).unwrap();
        assert!((oracle - (1.0 - c)).abs() < 1e-12, "{oracle}");
    }

    #[test]
    fn zero_commission_is_free() {
        let (a, b) = ([0.1, 0.9, 0.0], [0.0, 0.0, 1.0]);
        assert_eq!(transaction_factor(&a, &b, 0.0).unwrap(), 1.0);
        assert_eq!(transaction_factor_oracle(&a, &b, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn buying_from_cash_costs_about_one_commission() {
        // buying x of a risky asset from cash costs c on the purchase
        let c = 0.01;
        let mu = transaction_factor(&[1.0, 0.0], &[0.0, 1.0], c).unwrap();
        // mu (1 - 0) = 1 - c
        assert!((mu - (1.0 - c)).abs() < 1e-12);
    }
}
