//! Run-order quality drift detection.
//!
//! Regresses the pass indicator on normalized run order and assesses the
//! slope with a permutation test: pass outcomes are shuffled across run
//! indices and the observed slope is compared against the permutation
//! distribution (two-sided, with the +1 correction so the p-value is never
//! exactly zero). Deterministic for a given seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trial::TrialRecord;

/// Slope of the pass indicator over normalized run order, with a
/// permutation p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftResult {
    /// Pass-rate change per unit of normalized run order (first record at
    /// 0, last at 1). -0.08 means an 8-point drop across the run.
    pub slope: f64,
    /// Two-sided permutation p-value, (1 + #{|s*| >= |s|}) / (perms + 1).
    pub p_value: f64,
    pub permutations: u32,
    pub seed: u64,
    pub n_records: usize,
}

fn least_squares_slope(centered_x: &[f64], y: &[f64], denom: f64) -> f64 {
    let numer: f64 = centered_x.iter().zip(y).map(|(cx, yi)| cx * yi).sum();
    numer / denom
}

/// Runs the drift test over a trial log. Requires at least two distinct
/// `run_index` values and at least one permutation.
pub fn drift_test(records: &[TrialRecord], permutations: u32, seed: u64) -> Result<DriftResult> {
    if permutations == 0 {
        return Err(Error::InvalidParameter(
            "permutation count must be at least 1".into(),
        ));
    }
    let min = records.iter().map(|r| r.run_index).min();
    let max = records.iter().map(|r| r.run_index).max();
    let (Some(min), Some(max)) = (min, max) else {
        return Err(Error::InsufficientVariation(
            "drift test needs at least 2 records".into(),
        ));
    };
    if min == max {
        return Err(Error::InsufficientVariation(format!(
            "all {} records share run_index {min}; drift is undefined",
            records.len()
        )));
    }

    let span = (max - min) as f64;
    let xs: Vec<f64> = records
        .iter()
        .map(|r| (r.run_index - min) as f64 / span)
        .collect();
    let mut ys: Vec<f64> = records
        .iter()
        .map(|r| if r.passed { 1.0 } else { 0.0 })
        .collect();

    let x_mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let centered_x: Vec<f64> = xs.iter().map(|x| x - x_mean).collect();
    let denom: f64 = centered_x.iter().map(|cx| cx * cx).sum();
    if denom == 0.0 {
        return Err(Error::InsufficientVariation(
            "run order has no variation after normalization".into(),
        ));
    }

    let observed = least_squares_slope(&centered_x, &ys, denom);
    let threshold = observed.abs();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut at_least_as_extreme: u64 = 0;
    for _ in 0..permutations {
        ys.shuffle(&mut rng);
        let permuted = least_squares_slope(&centered_x, &ys, denom);
        if permuted.abs() >= threshold {
            at_least_as_extreme += 1;
        }
    }
    let p_value = (1 + at_least_as_extreme) as f64 / (u64::from(permutations) + 1) as f64;

    Ok(DriftResult {
        slope: observed,
        p_value,
        permutations,
        seed,
        n_records: records.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn record(passed: bool, run_index: u64) -> TrialRecord {
        TrialRecord {
            provider: "p".into(),
            model: "m".into(),
            benchmark: "b".into(),
            compression_ratio: 1.0,
            input_tokens: 10,
            output_tokens: 10,
            passed,
            cost_usd: 0.0,
            run_index,
            energy_j: Some(0.1),
            quality_score: None,
        }
    }

    #[test]
    fn two_records_pass_then_fail_gives_slope_minus_one() {
        let records = vec![record(true, 0), record(false, 1)];
        let result = drift_test(&records, 100, 7).unwrap();
        assert_relative_eq!(result.slope, -1.0, max_relative = 1e-12);
    }

    #[test]
    fn identical_run_indices_are_rejected() {
        let records = vec![record(true, 5), record(false, 5)];
        assert!(matches!(
            drift_test(&records, 100, 7),
            Err(Error::InsufficientVariation(_))
        ));
        assert!(matches!(
            drift_test(&[], 100, 7),
            Err(Error::InsufficientVariation(_))
        ));
    }

    #[test]
    fn balanced_alternating_null_has_tiny_slope_and_large_p() {
        let records: Vec<TrialRecord> =
            (0..2000).map(|i| record(i % 2 == 0, i as u64)).collect();
        let result = drift_test(&records, 2000, 42).unwrap();
        assert!(result.slope.abs() < 0.01, "slope = {}", result.slope);
        assert!(result.p_value > 0.05, "p = {}", result.p_value);
    }

    #[test]
    fn deterministic_given_seed() {
        let records: Vec<TrialRecord> =
            (0..500).map(|i| record(i % 3 == 0, i as u64)).collect();
        let a = drift_test(&records, 1000, 99).unwrap();
        let b = drift_test(&records, 1000, 99).unwrap();
        assert_eq!(a, b);
        let c = drift_test(&records, 1000, 100).unwrap();
        assert_eq!(a.slope, c.slope); // slope ignores the seed
    }

    #[test]
    fn strong_monotone_drift_is_significant() {
        // First half all passes, second half all failures.
        let records: Vec<TrialRecord> =
            (0..400).map(|i| record(i < 200, i as u64)).collect();
        let result = drift_test(&records, 1000, 11).unwrap();
        assert!(result.slope < -1.0);
        assert!(result.p_value < 0.01);
    }

    #[test]
    fn zero_permutations_rejected() {
        let records = vec![record(true, 0), record(false, 1)];
        assert!(matches!(
            drift_test(&records, 0, 7),
            Err(Error::InvalidParameter(_))
        ));
    }
}
