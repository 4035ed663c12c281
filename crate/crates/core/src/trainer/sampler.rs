use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use super::TrainError;

/// Redraws allowed before an out-of-range start is clamped to 0.
pub const MAX_REDRAWS: usize = 100;

/// Picks a contiguous batch `[T1, T1 + batch)` from a buffer of `len`
/// experiences. The distance `k = latest_start - T1` follows
/// `P(k) = bias (1 - bias)^k`, so the most recent batches are the most
/// likely.
pub fn sample_batch<R: Rng + ?Sized>(
    len: usize,
    batch: usize,
    bias: f64,
    rng: &mut R,
) -> Result<Range<usize>, TrainError> {
    if batch == 0 || batch > len {
        return Err(TrainError::BatchTooLarge { batch, len });
    }
    let geometric = Geometric::new(bias).map_err(|e| TrainError::InvalidConfig(format!("sample bias {bias}: {e}")))?;
    let latest = (len - batch) as u64;
    for _ in 0..MAX_REDRAWS {
        let k = geometric.sample(rng);
        if k <= latest {
            let start = (latest - k) as usize;
            return Ok(start..start + batch);
        }
    }
    Ok(0..batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn certain_bias_takes_latest_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(sample_batch(50, 10, 1.0, &mut rng).unwrap(), 40..50);
        }
    }

    #[test]
    fn full_length_batch_is_whole_buffer() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_batch(30, 30, 0.002, &mut rng).unwrap(), 0..30);
    }

    #[test]
    fn oversized_batch_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(sample_batch(10, 11, 0.5, &mut rng), Err(TrainError::BatchTooLarge { .. })));
        assert!(sample_batch(10, 0, 0.5, &mut rng).is_err());
    }
}
