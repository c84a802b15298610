//! Green AI Scores and the quality-energy Pareto frontier.
//!
//! GAS puts every model on a 0-100 scale against the most energy-efficient
//! model in the same matched snapshot: per trial, per successful outcome,
//! and quality-gated so low-energy-but-low-quality models cannot be
//! overrated. The gate divides by the pass rate of the reference model (the
//! one with minimum energy per success); that choice is recorded in the
//! report so consumers can see which rule produced the numbers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trial::AggregateRow;

/// Matched per-model metrics: pass rate plus energy per trial and per
/// success over the same prompt distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOutcome {
    pub model: String,
    pub pass_rate: f64,
    pub energy_per_trial_j: f64,
    /// `energy_per_trial_j / pass_rate`; absent when nothing passed.
    pub energy_per_success_j: Option<f64>,
}

impl ModelOutcome {
    /// Builds an outcome, deriving energy-per-success from the pass rate.
    pub fn new(model: impl Into<String>, pass_rate: f64, energy_per_trial_j: f64) -> Result<Self> {
        let model = model.into();
        if !(0.0..=1.0).contains(&pass_rate) || !pass_rate.is_finite() {
            return Err(Error::Validation(format!(
                "model '{model}': pass_rate must be in [0, 1], got {pass_rate}"
            )));
        }
        if !energy_per_trial_j.is_finite() || energy_per_trial_j <= 0.0 {
            return Err(Error::Validation(format!(
                "model '{model}': energy_per_trial_j must be > 0, got {energy_per_trial_j}"
            )));
        }
        let energy_per_success_j = if pass_rate > 0.0 {
            Some(energy_per_trial_j / pass_rate)
        } else {
            None
        };
        Ok(Self {
            model,
            pass_rate,
            energy_per_trial_j,
            energy_per_success_j,
        })
    }

    /// Builds an outcome from explicit parts, checking the construction
    /// invariant `energy_per_success = energy_per_trial / pass_rate`.
    pub fn from_parts(
        model: impl Into<String>,
        pass_rate: f64,
        energy_per_trial_j: f64,
        energy_per_success_j: f64,
    ) -> Result<Self> {
        let outcome = Self::new(model, pass_rate, energy_per_trial_j)?;
        let Some(derived) = outcome.energy_per_success_j else {
            return Err(Error::Validation(format!(
                "model '{}': explicit energy_per_success_j given but pass_rate is 0",
                outcome.model
            )));
        };
        let diff = (derived - energy_per_success_j).abs();
        if diff > 1e-9 * derived.abs() {
            return Err(Error::Validation(format!(
                "model '{}': energy_per_success_j {} is inconsistent with \
                 energy_per_trial_j / pass_rate = {}",
                outcome.model, energy_per_success_j, derived
            )));
        }
        Ok(outcome)
    }

    /// Builds an outcome from a model-grouped aggregate row.
    pub fn from_aggregate(row: &AggregateRow) -> Result<Self> {
        let model = row.model.clone().ok_or_else(|| {
            Error::InvalidParameter("GAS inputs must be grouped by model".into())
        })?;
        Self::new(model, row.pass_rate, row.mean_energy_j)
    }
}

/// Per-model Green AI Scores. The success-based pair is absent for models
/// excluded by a zero pass rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasScore {
    pub model: String,
    /// 100 x (best energy/trial) / (own energy/trial); 100 = best observed.
    pub gas_trial: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gas_success: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gas_quality_gated: Option<f64>,
}

/// A model excluded from the success-based scores, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasExclusion {
    pub model: String,
    pub reason: String,
}

/// Full scoring output with the gate rule recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasReport {
    pub scores: Vec<GasScore>,
    pub exclusions: Vec<GasExclusion>,
    /// Model anchoring the success-based scale and the quality gate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_model: Option<String>,
    /// Which pass rate the quality gate divides by.
    pub gate_rule: String,
}

/// Rounds a score to one decimal, the display form used in score tables.
pub fn display_score(score: f64) -> String {
    format!("{score:.1}")
}

/// Computes GAS scores over a matched snapshot of model outcomes.
///
/// Models with a zero pass rate keep their trial score but are excluded
/// from the success-based scores with an explicit record.
pub fn gas_scores(outcomes: &[ModelOutcome]) -> Result<GasReport> {
    if outcomes.is_empty() {
        return Err(Error::InsufficientData(
            "GAS needs at least one model outcome".into(),
        ));
    }
    for outcome in outcomes {
        if !outcome.energy_per_trial_j.is_finite() || outcome.energy_per_trial_j <= 0.0 {
            return Err(Error::Validation(format!(
                "model '{}': energy_per_trial_j must be > 0",
                outcome.model
            )));
        }
    }

    let best_trial = outcomes
        .iter()
        .map(|o| o.energy_per_trial_j)
        .fold(f64::INFINITY, f64::min);

    // Reference = minimum energy per success among scorable models; its
    // pass rate anchors the quality gate. Ties resolve to the lexicographic
    // first model name for determinism.
    let reference = outcomes
        .iter()
        .filter(|o| o.energy_per_success_j.is_some())
        .min_by(|a, b| {
            let ea = a.energy_per_success_j.unwrap();
            let eb = b.energy_per_success_j.unwrap();
            ea.partial_cmp(&eb)
                .expect("energies are finite")
                .then_with(|| a.model.cmp(&b.model))
        });
    let best_success = reference.map(|o| o.energy_per_success_j.unwrap());
    let best_pass = reference.map(|o| o.pass_rate);

    let mut scores = Vec::with_capacity(outcomes.len());
    let mut exclusions = Vec::new();
    for outcome in outcomes {
        // Divide first: best/own is exactly 1.0 for the best model, so it
        // scores exactly 100.
        let gas_trial = 100.0 * (best_trial / outcome.energy_per_trial_j);
        let (gas_success, gas_quality_gated) = match outcome.energy_per_success_j {
            Some(own_success) => {
                let success = 100.0 * (best_success.expect("reference exists") / own_success);
                let gate = (outcome.pass_rate / best_pass.expect("reference exists")).min(1.0);
                (Some(success), Some(success * gate))
            }
            None => {
                exclusions.push(GasExclusion {
                    model: outcome.model.clone(),
                    reason: "zero pass rate; excluded from success-based scores".into(),
                });
                (None, None)
            }
        };
        scores.push(GasScore {
            model: outcome.model.clone(),
            gas_trial,
            gas_success,
            gas_quality_gated,
        });
    }
    scores.sort_by(|a, b| {
        b.gas_trial
            .partial_cmp(&a.gas_trial)
            .expect("scores are finite")
            .then_with(|| a.model.cmp(&b.model))
    });
    Ok(GasReport {
        scores,
        exclusions,
        reference_model: reference.map(|o| o.model.clone()),
        gate_rule: "gate divides by the pass rate of the minimum energy-per-success model".into(),
    })
}

/// One configuration on the quality-energy plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub model: String,
    pub compression_ratio: f64,
    pub energy_j: f64,
    /// Fraction in [0, 1]; pass rate when derived from trial logs.
    pub quality: f64,
}

/// Indices of the maximal non-dominated set under (minimize energy,
/// maximize quality). A point is dominated when another point has <= energy
/// and >= quality with at least one strict; points equal on both axes are
/// both retained. Returned indices are ascending.
pub fn pareto_frontier_indices(points: &[ParetoPoint]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .energy_j
            .partial_cmp(&points[b].energy_j)
            .expect("energies are finite")
            .then(
                points[b]
                    .quality
                    .partial_cmp(&points[a].quality)
                    .expect("qualities are finite"),
            )
    });

    let mut kept = Vec::new();
    let mut best_quality = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        // One sweep group = all points at the same energy.
        let energy = points[order[i]].energy_j;
        let mut j = i;
        while j < order.len() && points[order[j]].energy_j == energy {
            j += 1;
        }
        let group_max = points[order[i]].quality; // sorted descending within group
        if group_max > best_quality {
            for &idx in &order[i..j] {
                if points[idx].quality == group_max {
                    kept.push(idx);
                }
            }
            best_quality = group_max;
        }
        i = j;
    }
    kept.sort_unstable();
    kept
}

/// The maximal non-dominated set itself, in (energy asc, quality desc,
/// model, ratio) order.
pub fn pareto_frontier(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut frontier: Vec<ParetoPoint> = pareto_frontier_indices(points)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();
    frontier.sort_by(|a, b| {
        a.energy_j
            .partial_cmp(&b.energy_j)
            .expect("finite")
            .then(b.quality.partial_cmp(&a.quality).expect("finite"))
            .then_with(|| a.model.cmp(&b.model))
            .then(
                a.compression_ratio
                    .partial_cmp(&b.compression_ratio)
                    .expect("finite"),
            )
    });
    frontier
}
