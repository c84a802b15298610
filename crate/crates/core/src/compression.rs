//! Energy accounting for prompt compression.
//!
//! Running a compressor costs energy up front; shrinking the prompt saves
//! energy on every downstream inference. These operations quantify the
//! cost, the savings, the energy ROI, the break-even query count, and the
//! observed net effect when output lengths shift between conditions.

use serde::{Deserialize, Serialize};

use crate::energy::{
    estimate_energy_simplified, CalibrationConstants, ModelProfile, TokenCounts,
};
use crate::error::{Error, Result};

/// A compression pass over a prompt: the achieved ratio
/// (compressed/original, 1.0 = uncompressed), the original prompt length,
/// and the compressor's own size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionPlan {
    /// Compressed token count divided by original, in (0, 1].
    pub ratio: f64,
    pub original_tokens: u64,
    /// Compressor parameter count in billions.
    pub compressor_params_b: f64,
}

impl CompressionPlan {
    /// Default compressor size in billions of parameters (a 350M-parameter
    /// compressor).
    pub const DEFAULT_COMPRESSOR_PARAMS_B: f64 = 0.35;

    pub fn new(ratio: f64, original_tokens: u64) -> Result<Self> {
        Self::with_compressor(ratio, original_tokens, Self::DEFAULT_COMPRESSOR_PARAMS_B)
    }

    pub fn with_compressor(
        ratio: f64,
        original_tokens: u64,
        compressor_params_b: f64,
    ) -> Result<Self> {
        let plan = Self {
            ratio,
            original_tokens,
            compressor_params_b,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.ratio.is_finite() || self.ratio <= 0.0 || self.ratio > 1.0 {
            return Err(Error::Validation(format!(
                "compression ratio must be in (0, 1], got {}",
                self.ratio
            )));
        }
        if !self.compressor_params_b.is_finite() || self.compressor_params_b <= 0.0 {
            return Err(Error::Validation(format!(
                "compressor_params_b must be positive, got {}",
                self.compressor_params_b
            )));
        }
        Ok(())
    }
}

/// Energy spent running the compressor over the original prompt:
/// `epsilon_comp * original_tokens * sqrt(compressor_params_b)`.
pub fn compression_energy(plan: &CompressionPlan, calib: &CalibrationConstants) -> f64 {
    calib.epsilon_comp * plan.original_tokens as f64 * plan.compressor_params_b.sqrt()
}

/// Prefill energy saved downstream by shrinking the prompt:
/// `(1 - ratio) * original_tokens * epsilon * sqrt(target_params_b) * PUE`.
pub fn energy_saved(
    plan: &CompressionPlan,
    target: &ModelProfile,
    calib: &CalibrationConstants,
    pue: f64,
) -> Result<f64> {
    plan.validate()?;
    target.validate()?;
    calib.validate()?;
    if !pue.is_finite() || pue < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "pue must be >= 1.0, got {pue}"
        )));
    }
    Ok((1.0 - plan.ratio)
        * plan.original_tokens as f64
        * calib.epsilon
        * target.param_count_b.sqrt()
        * pue)
}

/// Energy ROI of compression under the shared-constant assumption
/// (inference and compression use the same per-token constant and the PUE
/// cancels): `(1 - ratio) * sqrt(target_params_b) / sqrt(compressor_params_b)`.
///
/// The prompt length cancels algebraically, so the ROI is independent of
/// `original_tokens`.
pub fn energy_roi(plan: &CompressionPlan, target: &ModelProfile) -> f64 {
    (1.0 - plan.ratio) * target.param_count_b.sqrt() / plan.compressor_params_b.sqrt()
}

/// Generalized ROI with distinct inference/compression constants and an
/// explicit PUE on the savings side. Reduces to [`energy_roi`] when
/// `epsilon == epsilon_comp` and `pue == 1`.
pub fn energy_roi_general(
    plan: &CompressionPlan,
    target: &ModelProfile,
    calib: &CalibrationConstants,
    pue: f64,
) -> Result<f64> {
    calib.validate()?;
    if !pue.is_finite() || pue < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "pue must be >= 1.0, got {pue}"
        )));
    }
    Ok((1.0 - plan.ratio) * calib.epsilon * target.param_count_b.sqrt() * pue
        / (calib.epsilon_comp * plan.compressor_params_b.sqrt()))
}

/// Queries needed to recoup the compression energy; `None` when the ROI is
/// zero (ratio 1.0) and the cost is never recovered.
pub fn break_even_queries(roi: f64) -> Option<f64> {
    if roi > 0.0 {
        Some(1.0 / roi)
    } else {
        None
    }
}

/// Net energy effect of compressing, measured across two observed
/// conditions: `[E(compressed tokens) + compression cost] - E(baseline
/// tokens)`, both sides evaluated with the simplified formula on the target
/// model. Positive means compression cost energy overall (e.g. when the
/// compressed condition triggers output expansion).
///
/// A ratio of 1.0 is the uncompressed control condition, so no compressor
/// cost is charged.
pub fn net_energy_delta(
    plan: &CompressionPlan,
    target: &ModelProfile,
    baseline: TokenCounts,
    compressed: TokenCounts,
    calib: &CalibrationConstants,
    pue: f64,
) -> Result<f64> {
    plan.validate()?;
    let baseline_j = estimate_energy_simplified(baseline, target, calib, pue)?.total_j;
    let compressed_j = estimate_energy_simplified(compressed, target, calib, pue)?.total_j;
    let compressor_j = if plan.ratio < 1.0 {
        compression_energy(plan, calib)
    } else {
        0.0
    };
    Ok(compressed_j + compressor_j - baseline_j)
}
