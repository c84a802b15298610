//! Token-based inference energy estimation.
//!
//! Two proxy formulas estimate per-query energy from token counts and model
//! size: a full form with separate prefill/decode constants, a configurable
//! size-scaling exponent, and an attention-scaling hook, and a simplified
//! form driven by a single per-token constant and a decode weight. Both split
//! the estimate into a prefill phase (input tokens, processed in parallel)
//! and a decode phase (output tokens, generated sequentially at a higher
//! per-token cost). Measured GPU power traces can be integrated directly as
//! a third, formula-free path.
//!
//! All energies are joules; kWh appears only at the carbon boundary.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A model under estimation: a unique name plus the metadata the proxy
/// formulas need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub name: String,
    /// Parameter count in billions.
    pub param_count_b: f64,
    /// Provider identifier; may be empty when the model is not bound to one.
    pub provider: String,
}

impl ModelProfile {
    pub fn new(
        name: impl Into<String>,
        param_count_b: f64,
        provider: impl Into<String>,
    ) -> Result<Self> {
        let profile = Self {
            name: name.into(),
            param_count_b,
            provider: provider.into(),
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Validation("model name must be nonempty".into()));
        }
        if !self.param_count_b.is_finite() || self.param_count_b <= 0.0 {
            return Err(Error::Validation(format!(
                "model '{}': param_count_b must be positive, got {}",
                self.name, self.param_count_b
            )));
        }
        Ok(())
    }
}

/// Immutable name-keyed collection of model profiles.
#[derive(Debug, Clone, Default)]
pub struct ModelRegistry {
    models: BTreeMap<String, ModelProfile>,
}

impl ModelRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a registry, rejecting duplicate names.
    pub fn from_profiles(profiles: impl IntoIterator<Item = ModelProfile>) -> Result<Self> {
        let mut models = BTreeMap::new();
        for profile in profiles {
            profile.validate()?;
            let name = profile.name.clone();
            if models.insert(name.clone(), profile).is_some() {
                return Err(Error::Conflict(format!("duplicate model name '{name}'")));
            }
        }
        Ok(Self { models })
    }

    /// Every miss is an explicit error, never a silent default.
    pub fn get(&self, name: &str) -> Result<&ModelProfile> {
        self.models
            .get(name)
            .ok_or_else(|| Error::UnknownModel(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ModelProfile> {
        self.models.values()
    }
}

/// Input and output token counts for one query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenCounts {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl TokenCounts {
    pub fn new(input_tokens: u64, output_tokens: u64) -> Self {
        Self {
            input_tokens,
            output_tokens,
        }
    }
}

/// Calibrated constants for both proxy formulas.
///
/// `alpha` and `delta` carry no published calibration; the defaults keep the
/// decode-to-prefill ratio at 4x and otherwise serve relative comparison
/// only. Absolute full-formula results require site-specific calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConstants {
    /// Prefill base, J/token (full formula).
    pub alpha: f64,
    /// Decode base, J/token (full formula); defaults to `4 * alpha`.
    pub delta: f64,
    /// Size-scaling exponent in (0, 1]; sublinear to reflect memory-bandwidth
    /// limits.
    pub beta: f64,
    /// Simplified-formula constant, J/(token * sqrt(B)).
    pub epsilon: f64,
    /// Decode-to-prefill weight in the simplified formula.
    pub omega: f64,
    /// Reference parameter count in billions for the full formula.
    pub n_ref_b: f64,
    /// Compression-pass constant, J/(token * sqrt(B)).
    pub epsilon_comp: f64,
}

impl Default for CalibrationConstants {
    fn default() -> Self {
        let alpha = 0.01;
        Self {
            alpha,
            delta: 4.0 * alpha,
            beta: 0.75,
            epsilon: 0.15,
            omega: 4.0,
            n_ref_b: 7.0,
            epsilon_comp: 0.15,
        }
    }
}

impl CalibrationConstants {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("delta", self.delta),
            ("beta", self.beta),
            ("epsilon", self.epsilon),
            ("omega", self.omega),
            ("n_ref_b", self.n_ref_b),
            ("epsilon_comp", self.epsilon_comp),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::Validation(format!(
                    "calibration constant {name} must be strictly positive, got {value}"
                )));
            }
        }
        if self.beta > 1.0 {
            return Err(Error::Validation(format!(
                "beta must satisfy 0 < beta <= 1, got {}",
                self.beta
            )));
        }
        if self.omega < 1.0 {
            return Err(Error::Validation(format!(
                "omega must be >= 1, got {}",
                self.omega
            )));
        }
        Ok(())
    }
}

/// Attention-scaling hook `f(input_tokens)` in the full formula.
///
/// Defaults to a constant 1.0. A piecewise-linear form is configurable for
/// experimentation: multipliers interpolate linearly from an implicit
/// anchor at (0 tokens, 1.0) through each `(threshold, multiplier)`
/// breakpoint and stay constant beyond the last one. Multipliers must be
/// at least 1.0 and non-decreasing so that prefill energy never decreases
/// as input grows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttentionScaling {
    #[default]
    ConstantOne,
    PiecewiseLinear { breakpoints: Vec<(u64, f64)> },
}

impl AttentionScaling {
    pub fn piecewise(breakpoints: Vec<(u64, f64)>) -> Result<Self> {
        let f = Self::PiecewiseLinear { breakpoints };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let Self::PiecewiseLinear { breakpoints } = self else {
            return Ok(());
        };
        let mut prev_threshold = 0u64;
        let mut prev_multiplier = 1.0f64;
        for (i, &(threshold, multiplier)) in breakpoints.iter().enumerate() {
            if i == 0 && threshold == 0 {
                return Err(Error::InvalidParameter(
                    "attention breakpoint thresholds must start above 0 tokens".into(),
                ));
            }
            if i > 0 && threshold <= prev_threshold {
                return Err(Error::InvalidParameter(format!(
                    "attention breakpoint thresholds must be strictly increasing \
                     ({prev_threshold} then {threshold})"
                )));
            }
            if !multiplier.is_finite() || multiplier < 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "attention multiplier at {threshold} tokens must be >= 1.0, got {multiplier}"
                )));
            }
            if multiplier < prev_multiplier {
                return Err(Error::InvalidParameter(format!(
                    "attention multipliers must be non-decreasing \
                     ({prev_multiplier} then {multiplier})"
                )));
            }
            prev_threshold = threshold;
            prev_multiplier = multiplier;
        }
        Ok(())
    }

    /// Evaluates the multiplier at an input-token count. Always >= 1.0 for a
    /// valid configuration; exactly 1.0 for `ConstantOne`.
    pub fn evaluate(&self, input_tokens: u64) -> f64 {
        let Self::PiecewiseLinear { breakpoints } = self else {
            return 1.0;
        };
        let t = input_tokens as f64;
        let mut prev = (0.0f64, 1.0f64);
        for &(threshold, multiplier) in breakpoints {
            let here = (threshold as f64, multiplier);
            if t <= here.0 {
                let span = here.0 - prev.0;
                let frac = if span > 0.0 { (t - prev.0) / span } else { 1.0 };
                return prev.1 + frac * (here.1 - prev.1);
            }
            prev = here;
        }
        prev.1
    }
}

/// Server-side overhead fractions plus datacenter PUE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerOverheads {
    /// CPU orchestration overhead as a fraction of GPU energy.
    pub alpha_cpu: f64,
    /// DRAM overhead fraction.
    pub alpha_dram: f64,
    /// Storage/network overhead fraction.
    pub alpha_io: f64,
    /// Power usage effectiveness, >= 1.0.
    pub pue: f64,
}

impl Default for ServerOverheads {
    fn default() -> Self {
        Self {
            alpha_cpu: 0.15,
            alpha_dram: 0.08,
            alpha_io: 0.02,
            pue: 1.2,
        }
    }
}

impl ServerOverheads {
    pub fn new(alpha_cpu: f64, alpha_dram: f64, alpha_io: f64, pue: f64) -> Result<Self> {
        let overheads = Self {
            alpha_cpu,
            alpha_dram,
            alpha_io,
            pue,
        };
        overheads.validate()?;
        Ok(overheads)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("alpha_cpu", self.alpha_cpu),
            ("alpha_dram", self.alpha_dram),
            ("alpha_io", self.alpha_io),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::Validation(format!(
                    "overhead fraction {name} must be >= 0, got {value}"
                )));
            }
        }
        if !self.pue.is_finite() || self.pue < 1.0 {
            return Err(Error::Validation(format!(
                "pue must be >= 1.0, got {}",
                self.pue
            )));
        }
        Ok(())
    }

    /// Server multiplier `1 + alpha_cpu + alpha_dram + alpha_io`, excluding
    /// PUE.
    pub fn server_multiplier(&self) -> f64 {
        1.0 + self.alpha_cpu + self.alpha_dram + self.alpha_io
    }
}

/// One timestamped power sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    pub timestamp_s: f64,
    pub power_w: f64,
}

/// An ordered GPU power trace; timestamps strictly increase and power is
/// nonnegative. Construction validates both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTrace {
    samples: Vec<PowerSample>,
}

impl PowerTrace {
    pub fn new(samples: Vec<PowerSample>) -> Result<Self> {
        for (i, sample) in samples.iter().enumerate() {
            if !sample.timestamp_s.is_finite() {
                return Err(Error::MalformedTrace(format!(
                    "sample {i}: timestamp {} is not finite",
                    sample.timestamp_s
                )));
            }
            if !sample.power_w.is_finite() || sample.power_w < 0.0 {
                return Err(Error::MalformedTrace(format!(
                    "sample {i}: power {} W is negative or not finite",
                    sample.power_w
                )));
            }
            if i > 0 && sample.timestamp_s <= samples[i - 1].timestamp_s {
                return Err(Error::MalformedTrace(format!(
                    "timestamps must be strictly increasing: sample {i} at {} s follows {} s",
                    sample.timestamp_s,
                    samples[i - 1].timestamp_s
                )));
            }
        }
        Ok(Self { samples })
    }

    /// Loads a trace from two-column CSV `timestamp_s,power_w`. The header
    /// row is required and must match exactly.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = csv_reader
            .headers()
            .map_err(|e| Error::Schema(format!("unreadable power-trace header: {e}")))?;
        let header_fields: Vec<&str> = headers.iter().collect();
        if header_fields != ["timestamp_s", "power_w"] {
            return Err(Error::Schema(format!(
                "power-trace header must be exactly 'timestamp_s,power_w', got '{}'",
                header_fields.join(",")
            )));
        }
        let mut samples = Vec::new();
        for (i, row) in csv_reader.records().enumerate() {
            let row = row.map_err(|e| Error::MalformedTrace(format!("row {}: {e}", i + 1)))?;
            if row.len() != 2 {
                return Err(Error::MalformedTrace(format!(
                    "row {}: expected 2 fields, got {}",
                    i + 1,
                    row.len()
                )));
            }
            let parse = |field: &str, what: &str| -> Result<f64> {
                field.parse::<f64>().map_err(|_| {
                    Error::MalformedTrace(format!("row {}: {what} '{field}' is not a number", i + 1))
                })
            };
            samples.push(PowerSample {
                timestamp_s: parse(&row[0], "timestamp_s")?,
                power_w: parse(&row[1], "power_w")?,
            });
        }
        Self::new(samples)
    }

    pub fn samples(&self) -> &[PowerSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Which path produced an energy estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyFormula {
    FullProxy,
    Simplified,
    MeasuredTrace,
}

/// A per-query energy estimate in joules with phase attribution.
///
/// Computed estimates always satisfy `total_j = prefill_j + decode_j`
/// exactly. Measured traces carry the total only; their phase fields are
/// `None` ("unattributed").
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub prefill_j: Option<f64>,
    pub decode_j: Option<f64>,
    pub total_j: f64,
    pub formula: EnergyFormula,
}

impl EnergyEstimate {
    pub fn computed(prefill_j: f64, decode_j: f64, formula: EnergyFormula) -> Self {
        Self {
            prefill_j: Some(prefill_j),
            decode_j: Some(decode_j),
            total_j: prefill_j + decode_j,
            formula,
        }
    }

    pub fn measured(total_j: f64) -> Self {
        Self {
            prefill_j: None,
            decode_j: None,
            total_j,
            formula: EnergyFormula::MeasuredTrace,
        }
    }

    /// Multiplies every joule component by `factor`, recomputing the total
    /// from the scaled phases so additivity stays exact.
    pub fn scaled(&self, factor: f64) -> Self {
        match (self.prefill_j, self.decode_j) {
            (Some(prefill), Some(decode)) => {
                Self::computed(prefill * factor, decode * factor, self.formula)
            }
            _ => Self {
                prefill_j: None,
                decode_j: None,
                total_j: self.total_j * factor,
                formula: self.formula,
            },
        }
    }
}

/// Hardware characteristics for the FLOP-level energy bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareProfile {
    /// Thermal design power in watts.
    pub tdp_w: f64,
    /// Peak throughput in FLOP/s.
    pub peak_flops: f64,
    /// Utilization efficiency in (0, 1]; inference workloads typically sit
    /// well below 1.
    pub utilization: f64,
}

impl HardwareProfile {
    pub fn new(tdp_w: f64, peak_flops: f64, utilization: f64) -> Result<Self> {
        let hw = Self {
            tdp_w,
            peak_flops,
            utilization,
        };
        hw.validate()?;
        Ok(hw)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tdp_w.is_finite() || self.tdp_w <= 0.0 {
            return Err(Error::Validation(format!(
                "tdp_w must be positive, got {}",
                self.tdp_w
            )));
        }
        if !self.peak_flops.is_finite() || self.peak_flops <= 0.0 {
            return Err(Error::Validation(format!(
                "peak_flops must be positive, got {}",
                self.peak_flops
            )));
        }
        if !self.utilization.is_finite() || self.utilization <= 0.0 || self.utilization > 1.0 {
            return Err(Error::Validation(format!(
                "utilization must be in (0, 1], got {}",
                self.utilization
            )));
        }
        Ok(())
    }
}

fn check_pue(pue: f64) -> Result<()> {
    if !pue.is_finite() || pue < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "pue must be >= 1.0, got {pue}"
        )));
    }
    Ok(())
}

/// Simplified proxy: `epsilon * (T_in + omega * T_out) * sqrt(N) * PUE`,
/// split so the prefill share covers `T_in` and the decode share covers
/// `omega * T_out`. `N` is the parameter count in billions.
pub fn estimate_energy_simplified(
    tokens: TokenCounts,
    model: &ModelProfile,
    calib: &CalibrationConstants,
    pue: f64,
) -> Result<EnergyEstimate> {
    model.validate()?;
    calib.validate()?;
    check_pue(pue)?;
    let sqrt_n = model.param_count_b.sqrt();
    let prefill = calib.epsilon * tokens.input_tokens as f64 * sqrt_n * pue;
    let decode = calib.epsilon * calib.omega * tokens.output_tokens as f64 * sqrt_n * pue;
    Ok(EnergyEstimate::computed(
        prefill,
        decode,
        EnergyFormula::Simplified,
    ))
}

/// Full proxy:
/// `PUE * [alpha * T_in * (N/N_ref)^beta * f(T_in) + delta * T_out * (N/N_ref)^beta]`.
pub fn estimate_energy_full(
    tokens: TokenCounts,
    model: &ModelProfile,
    calib: &CalibrationConstants,
    attention: &AttentionScaling,
    pue: f64,
) -> Result<EnergyEstimate> {
    model.validate()?;
    calib.validate()?;
    attention
        .validate()
        .map_err(|e| Error::InvalidParameter(format!("attention scaling: {e}")))?;
    check_pue(pue)?;
    let size_scale = (model.param_count_b / calib.n_ref_b).powf(calib.beta);
    let prefill = pue
        * calib.alpha
        * tokens.input_tokens as f64
        * size_scale
        * attention.evaluate(tokens.input_tokens);
    let decode = pue * calib.delta * tokens.output_tokens as f64 * size_scale;
    Ok(EnergyEstimate::computed(
        prefill,
        decode,
        EnergyFormula::FullProxy,
    ))
}

/// Trapezoidal integral of a power trace, in joules. Requires at least two
/// samples.
pub fn integrate_power_trace(trace: &PowerTrace) -> Result<f64> {
    let samples = trace.samples();
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "power trace needs at least 2 samples to integrate, got {}",
            samples.len()
        )));
    }
    let mut joules = 0.0;
    for pair in samples.windows(2) {
        let dt = pair[1].timestamp_s - pair[0].timestamp_s;
        joules += 0.5 * (pair[0].power_w + pair[1].power_w) * dt;
    }
    Ok(joules)
}

/// Scales GPU joules to whole-server wall energy:
/// `gpu_j * (1 + alpha_cpu + alpha_dram + alpha_io) * PUE`.
///
/// `gpu_j` must be nonnegative; overhead validity is a type invariant.
pub fn server_energy(gpu_j: f64, overheads: &ServerOverheads) -> f64 {
    debug_assert!(gpu_j >= 0.0, "gpu_j must be nonnegative");
    gpu_j * overheads.server_multiplier() * overheads.pue
}

/// Joules per FLOP: `tdp_w / (peak_flops * utilization)`.
pub fn flop_energy(hw: &HardwareProfile) -> f64 {
    hw.tdp_w / (hw.peak_flops * hw.utilization)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn model_7b() -> ModelProfile {
        ModelProfile::new("test-7b", 7.0, "openai").unwrap()
    }

    fn calib() -> CalibrationConstants {
        CalibrationConstants::default()
    }

    #[test]
    fn simplified_zero_tokens_is_zero() {
        let est =
            estimate_energy_simplified(TokenCounts::new(0, 0), &model_7b(), &calib(), 1.2).unwrap();
        assert_eq!(est.total_j, 0.0);
        assert_eq!(est.prefill_j, Some(0.0));
        assert_eq!(est.decode_j, Some(0.0));
        assert_eq!(est.formula, EnergyFormula::Simplified);
    }

    #[test]
    fn simplified_matches_arithmetic_oracle() {
        // 0.15 * (100 + 4 * 20) * sqrt(7) * 1.2, computed independently.
        let est = estimate_energy_simplified(TokenCounts::new(100, 20), &model_7b(), &calib(), 1.2)
            .unwrap();
        assert_relative_eq!(est.total_j, 85.72234247849273, max_relative = 1e-9);
    }

    #[test]
    fn simplified_doubling_tokens_doubles_total() {
        let a = estimate_energy_simplified(TokenCounts::new(123, 45), &model_7b(), &calib(), 1.2)
            .unwrap();
        let b = estimate_energy_simplified(TokenCounts::new(246, 90), &model_7b(), &calib(), 1.2)
            .unwrap();
        assert_eq!(b.total_j, 2.0 * a.total_j);
    }

    #[test]
    fn simplified_rejects_pue_below_one() {
        let err = estimate_energy_simplified(TokenCounts::new(1, 1), &model_7b(), &calib(), 0.0)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
        let err = estimate_energy_simplified(TokenCounts::new(1, 1), &model_7b(), &calib(), 0.9)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn full_matches_arithmetic_oracle() {
        // alpha=0.01, delta=0.04, N=N_ref=7, beta=0.75, f=1, pue=1:
        // prefill = 0.01*100 = 1.0 J, decode = 0.04*10 = 0.4 J.
        let est = estimate_energy_full(
            TokenCounts::new(100, 10),
            &model_7b(),
            &calib(),
            &AttentionScaling::ConstantOne,
            1.0,
        )
        .unwrap();
        assert_relative_eq!(est.prefill_j.unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(est.decode_j.unwrap(), 0.4, max_relative = 1e-12);
        assert_relative_eq!(est.total_j, 1.4, max_relative = 1e-12);
        assert_eq!(est.formula, EnergyFormula::FullProxy);
    }

    #[test]
    fn full_size_scale_is_identity_at_reference() {
        // (N/N_ref)^beta == 1 exactly when N == N_ref, regardless of beta.
        for beta in [0.1, 0.5, 0.75, 1.0] {
            let c = CalibrationConstants {
                beta,
                ..CalibrationConstants::default()
            };
            let est = estimate_energy_full(
                TokenCounts::new(50, 50),
                &model_7b(),
                &c,
                &AttentionScaling::ConstantOne,
                1.0,
            )
            .unwrap();
            let expected = 1.0 * c.alpha * 50.0 + c.delta * 50.0;
            assert_relative_eq!(est.total_j, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn full_decode_per_token_is_four_times_prefill_with_default_delta() {
        let est = estimate_energy_full(
            TokenCounts::new(1, 1),
            &model_7b(),
            &calib(),
            &AttentionScaling::ConstantOne,
            1.0,
        )
        .unwrap();
        assert_relative_eq!(
            est.decode_j.unwrap() / est.prefill_j.unwrap(),
            4.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn full_rejects_invalid_attention_config() {
        let bad = AttentionScaling::PiecewiseLinear {
            breakpoints: vec![(100, 0.5)],
        };
        let err = estimate_energy_full(
            TokenCounts::new(1, 1),
            &model_7b(),
            &calib(),
            &bad,
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn attention_piecewise_interpolates_from_one() {
        let f = AttentionScaling::piecewise(vec![(100, 1.0), (200, 2.0)]).unwrap();
        assert_eq!(f.evaluate(0), 1.0);
        assert_eq!(f.evaluate(50), 1.0);
        assert_eq!(f.evaluate(100), 1.0);
        assert_relative_eq!(f.evaluate(150), 1.5, max_relative = 1e-12);
        assert_eq!(f.evaluate(200), 2.0);
        assert_eq!(f.evaluate(10_000), 2.0);
    }

    #[test]
    fn attention_rejects_non_increasing_thresholds() {
        assert!(AttentionScaling::piecewise(vec![(100, 1.0), (100, 1.5)]).is_err());
        assert!(AttentionScaling::piecewise(vec![(0, 1.0)]).is_err());
        assert!(AttentionScaling::piecewise(vec![(100, 2.0), (200, 1.5)]).is_err());
    }

    #[test]
    fn trace_constant_power() {
        let trace = PowerTrace::new(vec![
            PowerSample {
                timestamp_s: 0.0,
                power_w: 300.0,
            },
            PowerSample {
                timestamp_s: 2.0,
                power_w: 300.0,
            },
        ])
        .unwrap();
        assert_eq!(integrate_power_trace(&trace).unwrap(), 600.0);
    }

    #[test]
    fn trace_linear_ramp_is_triangle_area() {
        let trace = PowerTrace::new(vec![
            PowerSample {
                timestamp_s: 0.0,
                power_w: 0.0,
            },
            PowerSample {
                timestamp_s: 10.0,
                power_w: 100.0,
            },
        ])
        .unwrap();
        assert_eq!(integrate_power_trace(&trace).unwrap(), 500.0);
    }

    #[test]
    fn trace_ten_hz_constant_matches_oracle() {
        // 11 samples of 450 W at 10 Hz; trapezoid oracle computed on the
        // sample list gives 450 J.
        let samples = (0..=10)
            .map(|i| PowerSample {
                timestamp_s: i as f64 / 10.0,
                power_w: 450.0,
            })
            .collect();
        let trace = PowerTrace::new(samples).unwrap();
        assert_relative_eq!(
            integrate_power_trace(&trace).unwrap(),
            450.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn trace_rejects_too_few_samples() {
        let trace = PowerTrace::new(vec![PowerSample {
            timestamp_s: 0.0,
            power_w: 10.0,
        }])
        .unwrap();
        assert!(matches!(
            integrate_power_trace(&trace),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn trace_rejects_non_monotone_timestamps() {
        let err = PowerTrace::new(vec![
            PowerSample {
                timestamp_s: 1.0,
                power_w: 10.0,
            },
            PowerSample {
                timestamp_s: 0.5,
                power_w: 10.0,
            },
        ])
        .unwrap_err();
        assert!(matches!(err, Error::MalformedTrace(_)));
    }

    #[test]
    fn trace_csv_requires_exact_header() {
        let good = "timestamp_s,power_w\n0.0,100\n1.0,100\n";
        let trace = PowerTrace::from_csv_reader(good.as_bytes()).unwrap();
        assert_eq!(trace.len(), 2);

        let bad = "time,watts\n0.0,100\n";
        assert!(matches!(
            PowerTrace::from_csv_reader(bad.as_bytes()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn server_energy_default_multiplier_is_1_5x() {
        let joules = server_energy(100.0, &ServerOverheads::default());
        assert_relative_eq!(joules, 150.0, max_relative = 1e-12);
        assert_eq!(server_energy(0.0, &ServerOverheads::default()), 0.0);
        let identity = ServerOverheads::new(0.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(server_energy(42.0, &identity), 42.0);
    }

    #[test]
    fn flop_energy_matches_oracle() {
        let hw = HardwareProfile::new(400.0, 1e15, 0.5).unwrap();
        assert_relative_eq!(flop_energy(&hw), 8.0e-13, max_relative = 1e-12);

        let unit = HardwareProfile::new(400.0, 400.0, 1.0).unwrap();
        assert_eq!(flop_energy(&unit), 1.0);

        let half = HardwareProfile::new(400.0, 1e15, 0.25).unwrap();
        assert_relative_eq!(
            flop_energy(&half),
            2.0 * flop_energy(&hw),
            max_relative = 1e-12
        );
    }

    #[test]
    fn hardware_profile_rejects_zero_utilization() {
        assert!(HardwareProfile::new(400.0, 1e15, 0.0).is_err());
        assert!(HardwareProfile::new(400.0, 1e15, 1.5).is_err());
    }

    #[test]
    fn model_registry_rejects_duplicates_and_reports_misses() {
        let registry = ModelRegistry::from_profiles(vec![model_7b()]).unwrap();
        assert!(registry.get("test-7b").is_ok());
        assert!(matches!(
            registry.get("nope"),
            Err(Error::UnknownModel(_))
        ));
        let dup = ModelRegistry::from_profiles(vec![model_7b(), model_7b()]);
        assert!(matches!(dup, Err(Error::Conflict(_))));
    }

    proptest! {
        #[test]
        fn additivity_is_exact(
            t_in in 0u64..100_000,
            t_out in 0u64..100_000,
            n in 0.1f64..2000.0,
            pue in 1.0f64..2.0,
        ) {
            let model = ModelProfile::new("m", n, "").unwrap();
            let est = estimate_energy_simplified(
                TokenCounts::new(t_in, t_out), &model, &calib(), pue).unwrap();
            prop_assert_eq!(est.total_j, est.prefill_j.unwrap() + est.decode_j.unwrap());
            let est = estimate_energy_full(
                TokenCounts::new(t_in, t_out), &model, &calib(),
                &AttentionScaling::ConstantOne, pue).unwrap();
            prop_assert_eq!(est.total_j, est.prefill_j.unwrap() + est.decode_j.unwrap());
        }

        #[test]
        fn token_monotonicity(
            t_in in 0u64..100_000,
            t_out in 0u64..100_000,
            bump in 1u64..10_000,
            n in 0.1f64..2000.0,
            pue in 1.0f64..2.0,
        ) {
            let model = ModelProfile::new("m", n, "").unwrap();
            let base = estimate_energy_simplified(
                TokenCounts::new(t_in, t_out), &model, &calib(), pue).unwrap();
            let more_in = estimate_energy_simplified(
                TokenCounts::new(t_in + bump, t_out), &model, &calib(), pue).unwrap();
            let more_out = estimate_energy_simplified(
                TokenCounts::new(t_in, t_out + bump), &model, &calib(), pue).unwrap();
            prop_assert!(more_in.total_j >= base.total_j);
            prop_assert!(more_out.total_j >= base.total_j);
        }

        #[test]
        fn simplified_linearity_and_slope_ratio(
            t_in in 1u64..100_000,
            t_out in 1u64..100_000,
            n in 0.1f64..2000.0,
            pue in 1.0f64..2.0,
        ) {
            let model = ModelProfile::new("m", n, "").unwrap();
            let c = calib();
            let per_in = estimate_energy_simplified(
                TokenCounts::new(1, 0), &model, &c, pue).unwrap().total_j;
            let per_out = estimate_energy_simplified(
                TokenCounts::new(0, 1), &model, &c, pue).unwrap().total_j;
            let est = estimate_energy_simplified(
                TokenCounts::new(t_in, t_out), &model, &c, pue).unwrap();
            let linear = t_in as f64 * per_in + t_out as f64 * per_out;
            prop_assert!((est.total_j - linear).abs() <= 1e-12 * linear.abs());
            prop_assert!((per_out / per_in - c.omega).abs() <= 1e-12 * c.omega);
        }

        #[test]
        fn simplified_sqrt_scaling_quadrupling_params_doubles_energy(
            t_in in 1u64..100_000,
            t_out in 1u64..100_000,
            n in 0.1f64..500.0,
            pue in 1.0f64..2.0,
        ) {
            let small = ModelProfile::new("s", n, "").unwrap();
            let large = ModelProfile::new("l", 4.0 * n, "").unwrap();
            let tokens = TokenCounts::new(t_in, t_out);
            let e_small = estimate_energy_simplified(tokens, &small, &calib(), pue).unwrap();
            let e_large = estimate_energy_simplified(tokens, &large, &calib(), pue).unwrap();
            let rel = (e_large.total_j - 2.0 * e_small.total_j).abs() / e_small.total_j;
            prop_assert!(rel < 1e-9);
        }

        #[test]
        fn full_size_scaling_matches_log_arithmetic(
            t_in in 1u64..10_000,
            t_out in 1u64..10_000,
            n in 0.1f64..2000.0,
            beta in 0.05f64..1.0,
        ) {
            let model = ModelProfile::new("m", n, "").unwrap();
            let c = CalibrationConstants { beta, ..CalibrationConstants::default() };
            let est = estimate_energy_full(
                TokenCounts::new(t_in, t_out), &model, &c,
                &AttentionScaling::ConstantOne, 1.0).unwrap();
            let scale = (beta * (n / c.n_ref_b).ln()).exp();
            let expected = c.alpha * t_in as f64 * scale + c.delta * t_out as f64 * scale;
            prop_assert!((est.total_j - expected).abs() <= 1e-9 * expected.abs());
        }

        #[test]
        fn full_reduces_to_simplified_with_matching_constants(
            t_in in 0u64..100_000,
            t_out in 0u64..100_000,
            n in 0.1f64..2000.0,
            n_ref in 0.5f64..100.0,
            epsilon in 0.001f64..1.0,
            omega in 1.0f64..8.0,
            pue in 1.0f64..2.0,
        ) {
            // With beta = 1/2, f = 1, alpha = epsilon * sqrt(n_ref) and
            // delta = omega * alpha, the full formula collapses to the
            // simplified one.
            let alpha = epsilon * n_ref.sqrt();
            let full_calib = CalibrationConstants {
                alpha,
                delta: omega * alpha,
                beta: 0.5,
                epsilon,
                omega,
                n_ref_b: n_ref,
                epsilon_comp: epsilon,
            };
            let model = ModelProfile::new("m", n, "").unwrap();
            let tokens = TokenCounts::new(t_in, t_out);
            let full = estimate_energy_full(
                tokens, &model, &full_calib, &AttentionScaling::ConstantOne, pue).unwrap();
            let simplified = estimate_energy_simplified(tokens, &model, &full_calib, pue).unwrap();
            let diff = (full.total_j - simplified.total_j).abs();
            prop_assert!(diff <= 1e-9 * simplified.total_j.max(1e-300));
        }

        #[test]
        fn trace_integration_matches_analytic_piecewise_linear(
            segments in prop::collection::vec((0.01f64..10.0, 0.0f64..1000.0), 1..40),
            p0 in 0.0f64..1000.0,
        ) {
            // Build a piecewise-linear power curve; the trapezoid rule is
            // exact for it, so compare against per-segment analytic areas
            // computed with a different algebraic form.
            let mut t = 0.0;
            let mut p = p0;
            let mut samples = vec![PowerSample { timestamp_s: t, power_w: p }];
            let mut analytic = 0.0;
            for (dt, p_next) in segments {
                analytic += p * dt + 0.5 * (p_next - p) * dt;
                t += dt;
                p = p_next;
                samples.push(PowerSample { timestamp_s: t, power_w: p });
            }
            let trace = PowerTrace::new(samples).unwrap();
            let integral = integrate_power_trace(&trace).unwrap();
            prop_assert!((integral - analytic).abs() <= 1e-9 * analytic.abs().max(1e-12));
        }
    }
}
